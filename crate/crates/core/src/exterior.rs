//! Brute-force pointwise exterior algebra over `dz¹…dzⁿ, dz̄¹…dz̄ⁿ`.
//!
//! A basis element is `dz^I ∧ dz̄^J` with `I`, `J` strictly increasing,
//! holomorphic generators first. Index sets are bitmasks, so `n ≤ 6`.
//!
//! Pairing: the increasing basis is orthogonal at `g = I`, with
//! `|dz^I ∧ dz̄^J|² = min(|I|, |J|)!`. The weight is 1 on `(p,0)`, `(0,q)`
//! and `(1,1)` forms; the `p!` on `(p,p)` forms is what makes the wedge
//! identity for real `(1,1)`-forms against `(p,0)`-forms hold verbatim.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

pub const MAX_DIM: usize = 6;

const I: C64 = C64::new(0.0, 1.0);

/// Pointwise Hermitian metric `g_{ij̄}` (row `i`, column `j`).
#[derive(Debug, Clone)]
pub struct HermMetricAt {
    g: CMat,
    /// `g^{ij̄}`: `Σ_j g^{ij̄} g_{kj̄} = δ^i_k`.
    ginv: CMat,
}

impl HermMetricAt {
    pub fn new(g: CMat) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::DimensionMismatch { expected: g.nrows(), found: g.ncols() });
        }
        let scale = 1.0 + linalg::max_abs(&g);
        let dev = linalg::hermitian_deviation(&g);
        if dev > 1e-12 * scale {
            return Err(Error::NotHermitian(dev));
        }
        if linalg::cholesky(&g).is_none() {
            return Err(Error::NotPositiveDefinite { at: "metric matrix".into() });
        }
        let ginv = linalg::inverse(&g)?.transpose();
        Ok(HermMetricAt { g, ginv })
    }

    pub fn identity(n: usize) -> Self {
        HermMetricAt { g: linalg::identity(n), ginv: linalg::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.g
    }

    pub fn inverse(&self) -> &CMat {
        &self.ginv
    }

    pub fn det(&self) -> f64 {
        self.g.determinant().re
    }

    /// `tr_ω α = g^{ij̄} α_{ij̄}` for `α = √−1 α_{ij̄} dzⁱ∧dz̄ʲ`.
    pub fn trace(&self, alpha: &CMat) -> C64 {
        let n = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += self.ginv[(i, j)] * alpha[(i, j)];
            }
        }
        s
    }
}

/// A `(p,q)`-form at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedForm {
    n: usize,
    p: usize,
    q: usize,
    terms: BTreeMap<(u32, u32), C64>,
}

/// Sign of the permutation sorting `a ++ b` (disjoint masks).
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let k = rest.trailing_zeros();
        inversions += (a >> (k + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

pub fn mask_of(indices: &[usize]) -> u32 {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn indices_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::DegreeOutOfRange(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

impl MixedForm {
    pub fn zero(n: usize, p: usize, q: usize) -> Result<Self> {
        check_dim(n)?;
        if p > n || q > n {
            return Err(Error::DegreeOutOfRange(format!("({p},{q}) in dimension {n}")));
        }
        Ok(MixedForm { n, p, q, terms: BTreeMap::new() })
    }

    /// Single term `c · dz^hol ∧ dz̄^anti`; indices 0-based, any order
    /// (the sign of the sorting permutation is applied).
    pub fn monomial(n: usize, hol: &[usize], anti: &[usize], c: C64) -> Result<Self> {
        let mut f = Self::zero(n, hol.len(), anti.len())?;
        f.add_term(hol, anti, c)?;
        Ok(f)
    }

    pub fn add_term(&mut self, hol: &[usize], anti: &[usize], c: C64) -> Result<()> {
        if hol.len() != self.p || anti.len() != self.q {
            return Err(Error::BidegreeMismatch(hol.len(), anti.len(), self.p, self.q));
        }
        if hol.iter().chain(anti).any(|&i| i >= self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.n + 1 });
        }
        let (Some(sh), Some(sa)) = (ordered_sign(hol), ordered_sign(anti)) else {
            return Ok(());
        };
        self.accumulate((mask_of(hol), mask_of(anti)), c * sh * sa);
        Ok(())
    }

    fn accumulate(&mut self, key: (u32, u32), c: C64) {
        let e = self.terms.entry(key).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `dz^I ∧ dz̄^J`, `I`, `J` strictly increasing.
    pub fn coeff(&self, hol: &[usize], anti: &[usize]) -> C64 {
        self.terms
            .get(&(mask_of(hol), mask_of(anti)))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, Vec<usize>, C64)> + '_ {
        self.terms.iter().map(|(&(h, a), &c)| (indices_of(h), indices_of(a), c))
    }

    pub fn scale(&self, c: C64) -> MixedForm {
        let mut out = MixedForm { terms: BTreeMap::new(), ..*self };
        for (&k, &v) in &self.terms {
            out.accumulate(k, v * c);
        }
        out
    }

    pub fn add(&self, other: &MixedForm) -> Result<MixedForm> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if (self.p, self.q) != (other.p, other.q) {
            return Err(Error::BidegreeMismatch(self.p, self.q, other.p, other.q));
        }
        let mut out = self.clone();
        for (&k, &v) in &other.terms {
            out.accumulate(k, v);
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &MixedForm) -> Result<MixedForm> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let (p, q) = (self.p + other.p, self.q + other.q);
        let mut out = MixedForm { n: self.n, p, q, terms: BTreeMap::new() };
        if p > self.n || q > self.n {
            // degree overflow: the zero form, bidegree clamped
            out.p = p.min(self.n);
            out.q = q.min(self.n);
            return Ok(out);
        }
        // dz^I dz̄^J dz^K dz̄^L = (−1)^{|J||K|} dz^I dz^K dz̄^J dz̄^L
        let cross = if (self.q * other.p).is_multiple_of(2) { 1.0 } else { -1.0 };
        for (&(i, j), &a) in &self.terms {
            for (&(k, l), &b) in &other.terms {
                if i & k != 0 || j & l != 0 {
                    continue;
                }
                let s = cross * merge_sign(i, k) * merge_sign(j, l);
                out.accumulate((i | k, j | l), a * b * s);
            }
        }
        Ok(out)
    }

    pub fn wedge_power(&self, k: usize) -> Result<MixedForm> {
        let mut out = MixedForm::monomial(self.n, &[], &[], C64::new(1.0, 0.0))?;
        for _ in 0..k {
            out = out.wedge(self)?;
        }
        Ok(out)
    }

    /// `(p,q) ↦ (q,p)`, coefficients conjugated.
    pub fn conjugate(&self) -> MixedForm {
        let mut out = MixedForm { n: self.n, p: self.q, q: self.p, terms: BTreeMap::new() };
        // conj(dz^I dz̄^J) = dz̄^I dz^J = (−1)^{|I||J|} dz^J dz̄^I
        let s = if (self.p * self.q).is_multiple_of(2) { 1.0 } else { -1.0 };
        for (&(i, j), &c) in &self.terms {
            out.accumulate((j, i), c.conj() * s);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &MixedForm) -> f64 {
        let mut keys: Vec<_> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        keys.iter()
            .map(|k| {
                let a = self.terms.get(k).copied().unwrap_or_default();
                let b = other.terms.get(k).copied().unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Coefficient relative to `(√−1)ⁿ dz¹∧dz̄¹∧…∧dzⁿ∧dz̄ⁿ`; zero unless
    /// the form has bidegree `(n,n)`.
    pub fn top_coefficient(&self) -> C64 {
        if self.p != self.n || self.q != self.n {
            return C64::new(0.0, 0.0);
        }
        let full = (1u32 << self.n) - 1;
        let c = self.terms.get(&(full, full)).copied().unwrap_or_default();
        // interleaved → block order costs (−1)^{n(n−1)/2}
        let s = if (self.n * self.n.saturating_sub(1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        c / (I.powi(self.n as i32) * s)
    }

    /// `√−1 Σ a_{ij̄} dzⁱ∧dz̄ʲ`; real iff `a` is Hermitian.
    pub fn from_hermitian_11(a: &CMat) -> Result<MixedForm> {
        let n = a.nrows();
        let mut f = MixedForm::zero(n, 1, 1)?;
        for i in 0..n {
            for j in 0..n {
                f.accumulate((1 << i, 1 << j), I * a[(i, j)]);
            }
        }
        Ok(f)
    }

    /// Inverse of [`MixedForm::from_hermitian_11`].
    pub fn to_matrix_11(&self) -> Result<CMat> {
        if (self.p, self.q) != (1, 1) {
            return Err(Error::BidegreeMismatch(self.p, self.q, 1, 1));
        }
        Ok(CMat::from_fn(self.n, self.n, |i, j| self.coeff(&[i], &[j]) / I))
    }
}

/// Sign sorting `idx` increasingly, `None` on a repeated index.
fn ordered_sign(idx: &[usize]) -> Option<f64> {
    let mut s = 1.0;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if idx[a] == idx[b] {
                return None;
            }
            if idx[a] > idx[b] {
                s = -s;
            }
        }
    }
    Some(s)
}

/// `ω = √−1 g_{jk̄} dz^j ∧ dz̄^k`.
pub fn fundamental_form(g: &HermMetricAt) -> MixedForm {
    MixedForm::from_hermitian_11(g.matrix()).expect("metric dimension validated")
}

/// Validating variant for raw matrices.
pub fn fundamental_form_of(g: &CMat) -> Result<MixedForm> {
    let dev = linalg::hermitian_deviation(g);
    if dev > 1e-12 * (1.0 + linalg::max_abs(g)) {
        return Err(Error::NotHermitian(dev));
    }
    MixedForm::from_hermitian_11(g)
}

/// Gram determinant `det[h(i_s, k_t)]` over index masks.
fn gram_det(h: &CMat, a: u32, b: u32) -> C64 {
    let ia = indices_of(a);
    let ib = indices_of(b);
    let m = CMat::from_fn(ia.len(), ib.len(), |s, t| h[(ia[s], ib[t])]);
    if m.nrows() == 0 {
        C64::new(1.0, 0.0)
    } else {
        m.determinant()
    }
}

/// Hermitian pairing of two forms of equal bidegree.
pub fn inner_product(a: &MixedForm, b: &MixedForm, g: &HermMetricAt) -> Result<C64> {
    if a.n != b.n || a.n != g.dim() {
        return Err(Error::DimensionMismatch { expected: a.n, found: b.n.max(g.dim()) });
    }
    if (a.p, a.q) != (b.p, b.q) {
        return Err(Error::BidegreeMismatch(a.p, a.q, b.p, b.q));
    }
    // ⟨dzⁱ, dzᵏ⟩ = g^{ik̄}, ⟨dz̄ⁱ, dz̄ᵏ⟩ = conj(g^{ik̄})
    let h = g.inverse();
    let hbar = h.map(|z| z.conj());
    let mut s = C64::new(0.0, 0.0);
    for (&(i, j), &x) in &a.terms {
        for (&(k, l), &y) in &b.terms {
            if i.count_ones() != k.count_ones() {
                continue;
            }
            s += x * y.conj() * gram_det(h, i, k) * gram_det(&hbar, j, l);
        }
    }
    Ok(s * factorial(a.p.min(a.q)))
}

/// Relative residual of the wedge identity for a real `(1,1)`-form `α` and a
/// `(p,0)`-form `f`, comparing top coefficients:
///
/// `(√−1)^{p²} α∧f∧f̄∧ω^{n−p−1}/(n−p−1)!` against
/// `[tr_ω α |f|² − ⟨α∧ω^{p−1}, (√−1)^{p²} f∧f̄/(p!(p−1)!)⟩] ωⁿ/n!`.
pub fn lemma21_check(alpha: &MixedForm, f: &MixedForm, g: &HermMetricAt) -> Result<f64> {
    let n = g.dim();
    let p = f.p;
    if f.q != 0 || p == 0 || p >= n {
        return Err(Error::DegreeOutOfRange(format!("p = {p} must satisfy 1 <= p <= n-1 = {}", n - 1)));
    }
    if alpha.bidegree() != (1, 1) {
        return Err(Error::BidegreeMismatch(alpha.p, alpha.q, 1, 1));
    }
    if alpha.n != n || f.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: alpha.n.max(f.n) });
    }
    if alpha.max_abs_diff(&alpha.conjugate()) > 1e-12 * (1.0 + coeff_scale(alpha)) {
        return Err(Error::NotHermitian(alpha.max_abs_diff(&alpha.conjugate())));
    }
    let omega = fundamental_form(g);
    let ipp = I.powi((p * p) as i32);
    let ffbar = f.wedge(&f.conjugate())?.scale(ipp);

    let lhs = alpha
        .wedge(&ffbar)?
        .wedge(&omega.wedge_power(n - p - 1)?)?
        .scale(C64::new(1.0 / factorial(n - p - 1), 0.0))
        .top_coefficient();

    let tr = g.trace(&alpha.to_matrix_11()?);
    let f_sq = inner_product(f, f, g)?;
    let pairing = inner_product(
        &alpha.wedge(&omega.wedge_power(p - 1)?)?,
        &ffbar.scale(C64::new(1.0 / (factorial(p) * factorial(p - 1)), 0.0)),
        g,
    )?;
    let rhs = (tr * f_sq - pairing) * g.det();
    Ok((lhs - rhs).norm() / (1.0 + rhs.norm()))
}

fn coeff_scale(f: &MixedForm) -> f64 {
    f.terms.values().fold(0.0, |m, c| m.max(c.norm()))
}

/// Random instances for the wedge-identity fuzzing.
pub mod sample {
    use super::*;

    pub fn real_11<R: Rng>(rng: &mut R, n: usize) -> MixedForm {
        MixedForm::from_hermitian_11(&linalg::random_hermitian(rng, n)).expect("n validated by caller")
    }

    /// Random `(p,0)`-form with every increasing coefficient populated.
    pub fn p0_form<R: Rng>(rng: &mut R, n: usize, p: usize) -> MixedForm {
        let mut f = MixedForm::zero(n, p, 0).expect("n validated by caller");
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == p {
                f.accumulate((mask, 0), linalg::random_complex(rng));
            }
        }
        f
    }

    pub fn metric<R: Rng>(rng: &mut R, n: usize) -> HermMetricAt {
        HermMetricAt::new(linalg::random_hermitian_pd(rng, n)).expect("random PD matrix")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    fn dz(n: usize, i: usize) -> MixedForm {
        MixedForm::monomial(n, &[i], &[], one()).unwrap()
    }

    fn dzbar(n: usize, i: usize) -> MixedForm {
        MixedForm::monomial(n, &[], &[i], one()).unwrap()
    }

    #[test]
    fn repeated_generator_vanishes() {
        assert!(dz(2, 0).wedge(&dz(2, 0)).unwrap().is_zero());
    }

    #[test]
    fn mixed_generators_anticommute() {
        let a = dz(2, 0).wedge(&dzbar(2, 0)).unwrap();
        let b = dzbar(2, 0).wedge(&dz(2, 0)).unwrap();
        assert_eq!(a, b.scale(-one()));
    }

    #[test]
    fn omega_power_top_coefficient() {
        // ω² = 2·(√−1)² dz¹∧dz̄¹∧dz²∧dz̄² by hand
        let w = fundamental_form(&HermMetricAt::identity(2));
        assert!((w.wedge_power(2).unwrap().top_coefficient() - 2.0).norm() < 1e-15);
        let w3 = fundamental_form(&HermMetricAt::identity(3)).wedge_power(3).unwrap();
        assert!((w3.top_coefficient() - 6.0).norm() < 1e-14);
    }

    #[test]
    fn omega_power_is_det_times_factorial() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            let g = sample::metric(&mut rng, n);
            let top = fundamental_form(&g).wedge_power(n).unwrap().top_coefficient();
            assert!((top - factorial(n) * g.det()).norm() < 1e-10 * factorial(n) * g.det());
        }
    }

    #[test]
    fn conjugation() {
        assert_eq!(dz(2, 0).conjugate(), dzbar(2, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = sample::p0_form(&mut rng, 3, 2).wedge(&sample::real_11(&mut rng, 3)).unwrap();
        assert_eq!(f.conjugate().conjugate(), f);
        // i^{p²} f∧f̄ is real
        for p in 1..=3 {
            let f = sample::p0_form(&mut rng, 3, p);
            let ff = f.wedge(&f.conjugate()).unwrap().scale(I.powi((p * p) as i32));
            assert!(ff.max_abs_diff(&ff.conjugate()) < 1e-14);
        }
    }

    #[test]
    fn fundamental_form_examples() {
        let w = fundamental_form(&HermMetricAt::identity(2));
        assert_eq!(w.coeff(&[0], &[0]), I);
        assert_eq!(w.coeff(&[1], &[1]), I);
        assert_eq!(w.coeff(&[0], &[1]), C64::new(0.0, 0.0));
        let g = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![one() * 2.0, one() * 3.0]));
        let w = fundamental_form(&HermMetricAt::new(g).unwrap());
        assert_eq!(w.coeff(&[0], &[0]), I * 2.0);
        assert_eq!(w.coeff(&[1], &[1]), I * 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = fundamental_form(&sample::metric(&mut rng, 3));
        assert!(w.max_abs_diff(&w.conjugate()) < 1e-15);
        let bad = CMat::from_row_slice(2, 2, &[one(), one(), -one(), one()]);
        assert!(matches!(fundamental_form_of(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn pairing_anchors() {
        let g = HermMetricAt::identity(2);
        assert_eq!(inner_product(&dz(2, 0), &dz(2, 0), &g).unwrap(), one());
        assert_eq!(inner_product(&dz(2, 0), &dz(2, 1), &g).unwrap(), C64::new(0.0, 0.0));
        let g = HermMetricAt::new(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            one() * 2.0,
            one(),
        ])))
        .unwrap();
        assert!((inner_product(&dz(2, 0), &dz(2, 0), &g).unwrap() - 0.5).norm() < 1e-15);
        assert!(matches!(
            inner_product(&dz(2, 0), &dzbar(2, 0), &g),
            Err(Error::BidegreeMismatch(..))
        ));
    }

    #[test]
    fn pairing_is_positive_and_sesquilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = sample::metric(&mut rng, 3);
        let a = sample::p0_form(&mut rng, 3, 2).wedge(&sample::real_11(&mut rng, 3)).unwrap();
        let b = sample::p0_form(&mut rng, 3, 2).wedge(&sample::real_11(&mut rng, 3)).unwrap();
        let aa = inner_product(&a, &a, &g).unwrap();
        assert!(aa.re > 0.0 && aa.im.abs() < 1e-12 * aa.re);
        let ab = inner_product(&a, &b, &g).unwrap();
        let ba = inner_product(&b, &a, &g).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
        let c = C64::new(0.3, -1.2);
        let cab = inner_product(&a.scale(c), &b, &g).unwrap();
        assert!((cab - c * ab).norm() < 1e-12);
    }

    #[test]
    fn omega_pairing_with_ffbar_matches_index_sum() {
        // Σ over all i and ordered I of |f_{iI}|² = p!·Σ_incr|f_J|², so the
        // displayed value p·Σ|f_{iI}|²/p! equals p·Σ_incr|f_J|².
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (n, p) = (3, 2);
        let g = HermMetricAt::identity(n);
        for _ in 0..20 {
            let f = sample::p0_form(&mut rng, n, p);
            let mut ordered = 0.0;
            for i in 0..n {
                for j in 0..n {
                    ordered += f.coeff(&[i.min(j), i.max(j)], &[]).norm_sqr() * (i != j) as u8 as f64;
                }
            }
            let expected = p as f64 * ordered / factorial(p);
            let omega = fundamental_form(&g);
            let ff = f
                .wedge(&f.conjugate())
                .unwrap()
                .scale(I.powi((p * p) as i32) / (factorial(p) * factorial(p - 1)));
            let lhs = inner_product(&omega.wedge_power(p).unwrap(), &ff, &g).unwrap();
            assert!((lhs - expected).norm() < 1e-12, "{lhs} vs {expected}");
        }
    }

    #[test]
    fn trace_matches_pairing_with_omega() {
        // ⟨α, ω⟩ = tr_ω α for (1,1)-forms
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=4 {
            let g = sample::metric(&mut rng, n);
            let alpha = sample::real_11(&mut rng, n);
            let tr = g.trace(&alpha.to_matrix_11().unwrap());
            let pair = inner_product(&alpha, &fundamental_form(&g), &g).unwrap();
            assert!((tr - pair).norm() < 1e-12 * (1.0 + tr.norm()));
        }
    }

    #[test]
    fn wedge_identity_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = sample::metric(&mut rng, 3);
        let alpha = sample::real_11(&mut rng, 3);
        let f0 = MixedForm::zero(3, 2, 0).unwrap();
        assert_eq!(lemma21_check(&alpha, &f0, &g).unwrap(), 0.0);
        let a0 = MixedForm::zero(3, 1, 1).unwrap();
        let f = sample::p0_form(&mut rng, 3, 1);
        assert!(lemma21_check(&a0, &f, &g).unwrap() < 1e-15);
        let f3 = sample::p0_form(&mut rng, 3, 3);
        assert!(matches!(lemma21_check(&alpha, &f3, &g), Err(Error::DegreeOutOfRange(_))));
    }

    #[test]
    fn wedge_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 2..=4 {
            for p in 1..n {
                for _ in 0..25 {
                    let g = sample::metric(&mut rng, n);
                    let alpha = sample::real_11(&mut rng, n);
                    let f = sample::p0_form(&mut rng, n, p);
                    let r = lemma21_check(&alpha, &f, &g).unwrap();
                    assert!(r < 1e-10, "n={n} p={p} residual {r}");
                }
            }
        }
    }
}
