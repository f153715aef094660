//! Holomorphic `(p,0)`-forms, the β form and pointwise norms.
//!
//! Coefficients are stored on strictly increasing multi-indices and the
//! pairing is unit-normalized: at `g = I`, `|η|² = Σ_{I incr} |η_I|²`.
//! With this choice `β_{ij̄} = ⟨ι_i η, ι_j η⟩_g` (no `1/p!`) and the
//! trace of β is `p·|η|²`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exterior::{indices_of, mask_of, HermMetricAt, MixedForm, MAX_DIM};
use crate::expr::{Expr, Tape, WirtingerVar};
use crate::geometry::{DerivCache, MetricJet, Model};
use crate::linalg::{self, CMat};

/// A `(p,0)`-form with holomorphic coefficient functions.
#[derive(Clone)]
pub struct PForm {
    n: usize,
    p: usize,
    coeffs: BTreeMap<u32, Expr>,
    program: Arc<Tape>,
}

impl std::fmt::Debug for PForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> =
            self.coeffs.iter().map(|(m, e)| format!("{:?}: {e}", indices_of(*m))).collect();
        write!(f, "PForm(n={}, p={}, {{{}}})", self.n, self.p, terms.join(", "))
    }
}

/// Sign sorting `idx`; `None` on repeats.
fn sort_sign(idx: &[usize]) -> Option<f64> {
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

impl PForm {
    /// Terms are `(indices, coefficient)`, indices 0-based in any order.
    pub fn new(n: usize, p: usize, terms: Vec<(Vec<usize>, Expr)>) -> Result<PForm> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::DegreeOutOfRange(format!("dimension {n}")));
        }
        if p > n {
            return Err(Error::DegreeOutOfRange(format!("degree {p} exceeds dimension {n}")));
        }
        let mut coeffs: BTreeMap<u32, Expr> = BTreeMap::new();
        for (idx, e) in terms {
            if idx.len() != p {
                return Err(Error::BidegreeMismatch(idx.len(), 0, p, 0));
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
                return Err(Error::DimensionMismatch { expected: n, found: bad + 1 });
            }
            if let Some(&v) = e.free_vars().iter().next_back() {
                if v >= 2 * n {
                    return Err(Error::DimensionMismatch { expected: 2 * n, found: v + 1 });
                }
            }
            let Some(s) = sort_sign(&idx) else { continue };
            let term = if s < 0.0 { -e } else { e };
            let key = mask_of(&idx);
            let merged = match coeffs.remove(&key) {
                Some(prev) => prev + term,
                None => term,
            };
            if !merged.is_zero() {
                coeffs.insert(key, merged);
            }
        }
        let program = Arc::new(compile(n, &coeffs));
        Ok(PForm { n, p, coeffs, program })
    }

    pub fn constant(n: usize, p: usize, terms: &[(Vec<usize>, C64)]) -> Result<PForm> {
        PForm::new(n, p, terms.iter().map(|(i, c)| (i.clone(), Expr::constant(*c))).collect())
    }

    /// `dz^{i₁}∧…∧dz^{i_p}` with unit coefficient.
    pub fn basis(n: usize, idx: &[usize]) -> Result<PForm> {
        PForm::constant(n, idx.len(), &[(idx.to_vec(), C64::new(1.0, 0.0))])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        match sort_sign(idx) {
            Some(s) => match self.coeffs.get(&mask_of(idx)) {
                Some(e) if s > 0.0 => e.clone(),
                Some(e) => -e.clone(),
                None => Expr::zero(),
            },
            None => Expr::zero(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &Expr)> {
        self.coeffs.iter().map(|(m, e)| (indices_of(*m), e))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.values().all(|e| e.is_constant())
    }

    pub fn value(&self, x: &[f64]) -> Result<FormAt> {
        Ok(self.jet(x)?.value)
    }

    /// Coefficients and their first Wirtinger derivatives at `x`.
    pub fn jet(&self, x: &[f64]) -> Result<FormJet> {
        if x.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, found: x.len() });
        }
        let vals = self.program.eval(x)?;
        let n = self.n;
        let masks: Vec<u32> = self.coeffs.keys().copied().collect();
        let m = masks.len();
        let mut value = FormAt::zero(n, self.p);
        let mut d = vec![FormAt::zero(n, self.p); n];
        let mut dbar_max = 0.0f64;
        for (t, &mask) in masks.iter().enumerate() {
            value.c[mask as usize] = vals[t];
            for k in 0..n {
                d[k].c[mask as usize] = vals[m + k * m + t];
                dbar_max = dbar_max.max(vals[m + n * m + k * m + t].norm());
            }
        }
        Ok(FormJet { value, d, dbar_max })
    }

    pub fn to_mixed(&self, x: &[f64]) -> Result<MixedForm> {
        self.value(x)?.to_mixed()
    }

    /// Pointwise contraction `ι_{∂_i} η`.
    pub fn contract(&self, i: usize, x: &[f64]) -> Result<FormAt> {
        Ok(self.value(x)?.contract(i))
    }

    /// Pull back along a holomorphic map `z(w)` given as the real-variable
    /// expressions of `(x_k, y_k)` and the complex Jacobian
    /// `jac[k][a] = ∂z^k/∂w^a`.
    pub(crate) fn pullback(&self, map: &[Expr], jac: &[Vec<Expr>]) -> Result<PForm> {
        let n = self.n;
        let mut terms = Vec::new();
        for (&mask, coeff) in &self.coeffs {
            let src = indices_of(mask);
            let c = coeff.substitute(map)?;
            for target in 0u32..(1 << n) {
                if target.count_ones() as usize != self.p {
                    continue;
                }
                let dst = indices_of(target);
                let minor: Vec<Vec<Expr>> =
                    src.iter().map(|&k| dst.iter().map(|&a| jac[k][a].clone()).collect()).collect();
                terms.push((dst, c.clone() * symbolic_det(&minor)));
            }
        }
        PForm::new(n, self.p, terms)
    }
}

/// Outputs: η_I, then ∂_k η_I, then ∂_k̄ η_I, each block over the
/// stored masks in order.
fn compile(n: usize, coeffs: &BTreeMap<u32, Expr>) -> Tape {
    let vals: Vec<Expr> = coeffs.values().cloned().collect();
    let mut outs = vals.clone();
    for k in 0..n {
        outs.extend(vals.iter().map(|e| e.wirtinger(WirtingerVar::dz(k))));
    }
    for k in 0..n {
        outs.extend(vals.iter().map(|e| e.wirtinger(WirtingerVar::dzbar(k))));
    }
    Tape::new(&outs)
}

/// Values of a `(p,0)`-form at a point, dense over index masks.
#[derive(Debug, Clone, PartialEq)]
pub struct FormAt {
    pub n: usize,
    pub p: usize,
    /// `c[mask]` is the coefficient on the increasing index set `mask`.
    pub c: Vec<C64>,
}

impl FormAt {
    pub fn zero(n: usize, p: usize) -> FormAt {
        FormAt { n, p, c: vec![C64::new(0.0, 0.0); 1 << n] }
    }

    /// Coefficient on an arbitrary ordered tuple (antisymmetric).
    pub fn get(&self, idx: &[usize]) -> C64 {
        match sort_sign(idx) {
            Some(s) => self.c[mask_of(idx) as usize] * s,
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn masks(&self) -> impl Iterator<Item = u32> + '_ {
        let p = self.p as u32;
        (0u32..(1 << self.n)).filter(move |m| m.count_ones() == p)
    }

    /// `ι_{∂_i}`: removes slot `s` holding `i` with sign `(−1)^{s}`
    /// (0-based slot).
    pub fn contract(&self, i: usize) -> FormAt {
        let mut out = FormAt::zero(self.n, self.p.saturating_sub(1));
        if self.p == 0 {
            return out;
        }
        for mask in self.masks() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let slot = (mask & ((1 << i) - 1)).count_ones();
            let s = if slot.is_multiple_of(2) { 1.0 } else { -1.0 };
            out.c[(mask & !(1 << i)) as usize] += self.c[mask as usize] * s;
        }
        out
    }

    pub fn to_mixed(&self) -> Result<MixedForm> {
        let mut f = MixedForm::zero(self.n, self.p, 0)?;
        for mask in self.masks() {
            let c = self.c[mask as usize];
            if c != C64::new(0.0, 0.0) {
                f.add_term(&indices_of(mask), &[], c)?;
            }
        }
        Ok(f)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Pairing of two `(p,0)` values through `h = g^{··̄}`:
/// `Σ_{I,K} a_I b̄_K det h[I,K]`.
pub fn pair(a: &FormAt, b: &FormAt, ginv: &CMat) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    let masks: Vec<u32> = a.masks().collect();
    if a.p == 0 {
        return a.c[0] * b.c[0].conj();
    }
    for &i in &masks {
        let x = a.c[i as usize];
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        for &k in &masks {
            let y = b.c[k as usize];
            if y == C64::new(0.0, 0.0) {
                continue;
            }
            s += x * y.conj() * minor_det(ginv, i, k);
        }
    }
    s
}

fn minor_det(h: &CMat, rows: u32, cols: u32) -> C64 {
    let r = indices_of(rows);
    let c = indices_of(cols);
    match r.len() {
        0 => C64::new(1.0, 0.0),
        1 => h[(r[0], c[0])],
        2 => h[(r[0], c[0])] * h[(r[1], c[1])] - h[(r[0], c[1])] * h[(r[1], c[0])],
        _ => CMat::from_fn(r.len(), c.len(), |s, t| h[(r[s], c[t])]).determinant(),
    }
}

#[derive(Debug, Clone)]
pub struct FormJet {
    pub value: FormAt,
    /// `∂_k η_I` for each `k`.
    pub d: Vec<FormAt>,
    /// `max |∂_k̄ η_I|`.
    pub dbar_max: f64,
}

/// `β_{ij̄}` at a point.
#[derive(Debug, Clone)]
pub struct BetaAt {
    pub point: Vec<f64>,
    pub matrix: CMat,
}

impl BetaAt {
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }

    /// PSD up to `1e−12·‖β‖`.
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -1e-12 * linalg::max_abs(&self.matrix).max(1e-300)
    }

    /// `β^{ij̄} = g^{il̄} g^{kj̄} β_{kl̄}`.
    pub fn raised(&self, ginv: &CMat) -> CMat {
        let n = self.matrix.nrows();
        CMat::from_fn(n, n, |i, j| {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                for l in 0..n {
                    s += ginv[(i, l)] * ginv[(k, j)] * self.matrix[(k, l)];
                }
            }
            s
        })
    }

    /// `|β|²_g = β^{ij̄} conj(β_{ij̄})`.
    pub fn norm_sq(&self, ginv: &CMat) -> f64 {
        let up = self.raised(ginv);
        up.iter().zip(self.matrix.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    }
}

/// β from pointwise values.
pub fn beta_from(eta: &FormAt, ginv: &CMat, point: &[f64]) -> BetaAt {
    let n = eta.n;
    let contractions: Vec<FormAt> = (0..n).map(|i| eta.contract(i)).collect();
    let matrix = CMat::from_fn(n, n, |i, j| pair(&contractions[i], &contractions[j], ginv));
    BetaAt { point: point.to_vec(), matrix }
}

pub fn beta(eta: &PForm, m: &Model, x: &[f64]) -> Result<BetaAt> {
    check_dims(eta, m)?;
    let g = m.metric(x)?;
    Ok(beta_from(&eta.value(x)?, g.inverse(), x))
}

pub fn norm_sq(eta: &PForm, m: &Model, x: &[f64]) -> Result<f64> {
    check_dims(eta, m)?;
    let g = m.metric(x)?;
    let v = eta.value(x)?;
    Ok(pair(&v, &v, g.inverse()).re)
}

/// `|tr_ω β − |η|²/p!| / (1 + |η|²)`.
pub fn trace_identity_residual(eta: &PForm, m: &Model, x: &[f64]) -> Result<f64> {
    check_dims(eta, m)?;
    let g = m.metric(x)?;
    let v = eta.value(x)?;
    let norm = pair(&v, &v, g.inverse()).re;
    let tr = g.trace(&beta_from(&v, g.inverse(), x).matrix).re;
    let p_fact: f64 = (1..=eta.p).map(|k| k as f64).product();
    Ok((tr - norm / p_fact).abs() / (1.0 + norm))
}

/// `|tr_ω β − p·|η|²| / (1 + |η|²)`: the relation that holds for the
/// unit-normalized pairing.
pub fn trace_relation_residual(eta: &PForm, m: &Model, x: &[f64]) -> Result<f64> {
    check_dims(eta, m)?;
    let g = m.metric(x)?;
    let v = eta.value(x)?;
    let norm = pair(&v, &v, g.inverse()).re;
    let tr = g.trace(&beta_from(&v, g.inverse(), x).matrix).re;
    Ok((tr - eta.p as f64 * norm).abs() / (1.0 + norm))
}

fn check_dims(eta: &PForm, m: &Model) -> Result<()> {
    if eta.n != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: eta.n });
    }
    Ok(())
}

/// Symbolic determinant by cofactor expansion (small matrices only).
pub(crate) fn symbolic_det(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone(),
        k => {
            let mut acc = Expr::zero();
            for c in 0..k {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, e)| e.clone()).collect())
                    .collect();
                let t = m[0][c].clone() * symbolic_det(&minor);
                acc = if c % 2 == 0 { acc + t } else { acc - t };
            }
            acc
        }
    }
}

/// Symbolic metric and `g^{ij̄}` for a model.
pub(crate) struct SymbolicMetric {
    pub ginv: Vec<Vec<Expr>>,
}

impl SymbolicMetric {
    pub fn new(potential: &Expr, n: usize) -> SymbolicMetric {
        let mut d = DerivCache::new(potential.clone());
        let g: Vec<Vec<Expr>> = (0..n).map(|i| (0..n).map(|j| d.get(&[i], &[j])).collect()).collect();
        let det = symbolic_det(&g);
        // g^{ij̄} = (G⁻¹)_{ji} = cof(G)_{ij} / det G
        let ginv = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let minor: Vec<Vec<Expr>> = g
                            .iter()
                            .enumerate()
                            .filter(|(r, _)| *r != i)
                            .map(|(_, row)| {
                                row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, e)| e.clone()).collect()
                            })
                            .collect();
                        let cof = symbolic_det(&minor);
                        let cof = if (i + j) % 2 == 0 { cof } else { -cof };
                        cof / det.clone()
                    })
                    .collect()
            })
            .collect();
        SymbolicMetric { ginv }
    }

    /// `|η|²_g` as an expression.
    pub fn norm_sq(&self, eta: &PForm) -> Expr {
        let mut u = Expr::zero();
        let terms: Vec<(Vec<usize>, Expr)> = eta.terms().map(|(i, e)| (i, e.clone())).collect();
        for (a, ea) in &terms {
            for (b, eb) in &terms {
                let minor: Vec<Vec<Expr>> =
                    a.iter().map(|&i| b.iter().map(|&k| self.ginv[i][k].clone()).collect()).collect();
                u = u + ea.clone() * eb.conj() * symbolic_det(&minor);
            }
        }
        u
    }
}

/// `u = |η|²_g` with its holomorphic first derivatives, compiled.
#[derive(Clone)]
pub struct NormField {
    n: usize,
    tape: Arc<Tape>,
}

impl NormField {
    pub fn new(eta: &PForm, m: &Model) -> Result<NormField> {
        check_dims(eta, m)?;
        let n = m.dim();
        let u = SymbolicMetric::new(m.potential(), n).norm_sq(eta);
        let mut outs = vec![u.clone()];
        outs.extend((0..n).map(|i| u.wirtinger(WirtingerVar::dz(i))));
        Ok(NormField { n, tape: Arc::new(Tape::new(&outs)) })
    }

    /// `(u, ∂_i u)` at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<C64>)> {
        let mut p = x.to_vec();
        p.resize(p.len().max(self.tape.arity()), 0.0);
        let v = self.tape.eval(&p)?;
        Ok((v[0].re, v[1..=self.n].to_vec()))
    }
}

/// `c · g^{ij̄} ∂_i u ∂_j̄ u` for `u = |η|²_g`; `c` is the gradient-norm
/// constant.
pub fn grad_norm_sq(eta: &PForm, m: &Model, x: &[f64], c: f64) -> Result<f64> {
    let field = NormField::new(eta, m)?;
    let g = m.metric(x)?;
    let (_, du) = field.eval(x)?;
    Ok(c * gradient_pairing(&du, g.inverse()))
}

/// `g^{ij̄} a_i ā_j`.
pub fn gradient_pairing(du: &[C64], ginv: &CMat) -> f64 {
    let n = du.len();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += ginv[(i, j)] * du[i] * du[j].conj();
        }
    }
    s.re
}

/// Holomorphy and d-closedness residuals over sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbarResidual {
    /// max |∂̄_k η_I|.
    pub dbar: f64,
    /// max |(∂η)_{kI}| antisymmetrized.
    pub closed: f64,
}

impl DbarResidual {
    pub fn max(&self) -> f64 {
        self.dbar.max(self.closed)
    }
}

/// Residuals at the given sample points.
pub fn dbar_residual(eta: &PForm, points: &[Vec<f64>]) -> Result<DbarResidual> {
    let mut r = DbarResidual { dbar: 0.0, closed: 0.0 };
    for x in points {
        let jet = eta.jet(x)?;
        r.dbar = r.dbar.max(jet.dbar_max);
        // (∂η)_{k i₁…i_p} = Σ over (p+1)-sets of alternating sums
        for mask in 0u32..(1 << eta.n) {
            if mask.count_ones() as usize != eta.p + 1 {
                continue;
            }
            let idx = indices_of(mask);
            let mut s = C64::new(0.0, 0.0);
            for (slot, &k) in idx.iter().enumerate() {
                let rest = mask & !(1 << k);
                let sign = if slot.is_multiple_of(2) { 1.0 } else { -1.0 };
                s += jet.d[k].c[rest as usize] * sign;
            }
            r.closed = r.closed.max(s.norm());
        }
    }
    Ok(r)
}

/// Default sample points for holomorphy checks: a `4^{2n}`-capped lattice
/// in the unit cube shifted off the origin.
pub fn sample_points(n: usize) -> Vec<Vec<f64>> {
    let per: usize = if n <= 2 { 4 } else { 2 };
    let total = per.pow(2 * n as u32);
    (0..total)
        .map(|mut idx| {
            (0..2 * n)
                .map(|_| {
                    let v = (idx % per) as f64 / per as f64 + 0.13;
                    idx /= per;
                    v
                })
                .collect()
        })
        .collect()
}

/// `(D'_i η)_{i₁…i_p} = ∂_i η_I − Σ_s Γ^m_{i i_s} η_{i₁…m…i_p}` on an
/// arbitrary ordered tuple.
pub fn covariant_component(jet: &MetricJet, eta: &FormJet, gamma: &crate::geometry::Christoffel, i: usize, idx: &[usize]) -> C64 {
    let n = jet.n;
    let mut s = eta.d[i].get(idx);
    let mut tmp = idx.to_vec();
    for slot in 0..idx.len() {
        for m in 0..n {
            let gam = gamma.get(m, i, idx[slot]);
            if gam == C64::new(0.0, 0.0) {
                continue;
            }
            tmp[slot] = m;
            s -= gam * eta.value.get(&tmp);
        }
        tmp[slot] = idx[slot];
    }
    s
}

/// `D'_i η` for each direction `i`.
pub fn covariant_from(jet: &MetricJet, eta: &FormJet) -> Vec<FormAt> {
    let n = jet.n;
    let p = eta.value.p;
    let gamma = jet.christoffel();
    (0..n)
        .map(|i| {
            let mut out = FormAt::zero(n, p);
            let masks: Vec<u32> = out.masks().collect();
            for mask in masks {
                out.c[mask as usize] = covariant_component(jet, eta, &gamma, i, &indices_of(mask));
            }
            out
        })
        .collect()
}

pub fn covariant_deriv(m: &Model, eta: &PForm, x: &[f64]) -> Result<Vec<FormAt>> {
    check_dims(eta, m)?;
    Ok(covariant_from(&m.jet(x)?, &eta.jet(x)?))
}

/// Metric at `x` as a validated pointwise object.
pub fn metric_at(m: &Model, x: &[f64]) -> Result<HermMetricAt> {
    m.metric(x)
}

#[cfg(test)]
mod tests;
