use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forms::BetaAt;
use crate::geometry::{orthonormal_frame, CurvatureAt};
use crate::linalg::{self, CMat};

/// Worst slack of `2R(e₁, ē₁, W, W̄) ≥ (1 + |⟨W, e₁⟩|²) R(e₁, ē₁, e₁, ē₁)`
/// over `samples` random g-unit `W` (plus `e₁` and the coordinate
/// directions). `e1` must be a g-unit minimizer of `H`.
pub fn yang_lemma_check(r: &CurvatureAt, g: &CMat, e1: &[C64], samples: usize, seed: u64) -> Result<f64> {
    let n = r.n;
    if e1.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: e1.len() });
    }
    let frame = orthonormal_frame(g)?;
    let to_tangent = |u: &[C64]| -> Vec<C64> { (0..n).map(|i| (0..n).map(|a| frame[(i, a)] * u[a]).sum()).collect() };
    let r11 = r.quartic(e1);
    let slack = |w: &[C64]| {
        let ip = linalg::g_inner(g, w, e1).norm_sqr();
        2.0 * r.eval(e1, e1, w, w).re - (1.0 + ip) * r11
    };
    let mut worst = slack(e1);
    for i in 0..n {
        let mut u = vec![C64::new(0.0, 0.0); n];
        u[i] = C64::new(1.0, 0.0);
        worst = worst.min(slack(&to_tangent(&u)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        worst = worst.min(slack(&to_tangent(&linalg::random_unit(&mut rng, n))));
    }
    Ok(worst)
}

/// `Σ R_{iīkk̄} β_{iī} β_{kk̄} − (κ/2)[(Σ β_{iī})² + Σ β_{iī}²]` in a
/// g-orthonormal frame diagonalizing β. `kappa` must be a lower bound for
/// `H` at the point.
pub fn royden_check(r: &CurvatureAt, g: &CMat, beta: &BetaAt, kappa: f64) -> Result<f64> {
    let n = r.n;
    let e = orthonormal_frame(g)?;
    let bt = e.transpose() * &beta.matrix * e.map(|z| z.conj());
    let (vals, vecs) = linalg::hermitian_eigen(&bt);
    let a = &e * vecs.map(|z| z.conj());
    let rf = r.in_frame(&a);
    let mut lhs = 0.0;
    for i in 0..n {
        for k in 0..n {
            lhs += rf.get(i, i, k, k).re * vals[i] * vals[k];
        }
    }
    let tr: f64 = vals.iter().sum();
    let sq: f64 = vals.iter().map(|v| v * v).sum();
    Ok(lhs - 0.5 * kappa * (tr * tr + sq))
}

#[derive(Debug, Clone, Copy)]
pub struct BergerResult {
    /// Average of `H` over the unit sphere of the subspace.
    pub estimate: f64,
    /// `Σ_{i,j} R(e_i, ē_i, e_j, ē_j)` over the basis.
    pub reference: f64,
    /// `reference / estimate`; `k(k+1)/2` for the uniform measure.
    pub constant: f64,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Halton point on the unit sphere of `ℂᵏ`: moduli squared from simplex
/// spacings, phases uniform.
fn sphere_point(index: u64, k: usize) -> Vec<C64> {
    let mut cuts: Vec<f64> = (0..k - 1).map(|d| radical_inverse(index, PRIMES[d])).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.insert(0, 0.0);
    cuts.push(1.0);
    (0..k)
        .map(|a| {
            let modulus = (cuts[a + 1] - cuts[a]).max(0.0).sqrt();
            let phase = std::f64::consts::TAU * radical_inverse(index, PRIMES[k - 1 + a]);
            C64::from_polar(modulus, phase)
        })
        .collect()
}

/// Sphere average of `H` over the span of a g-orthonormal basis.
pub fn berger_average(r: &CurvatureAt, g: &CMat, basis: &[Vec<C64>], samples: usize) -> Result<BergerResult> {
    let k = basis.len();
    if k == 0 || k > 6 {
        return Err(Error::DegenerateBasis(format!("subspace dimension {k}")));
    }
    for (a, u) in basis.iter().enumerate() {
        if u.len() != r.n {
            return Err(Error::DimensionMismatch { expected: r.n, found: u.len() });
        }
        for (b, v) in basis.iter().enumerate() {
            let expected = if a == b { 1.0 } else { 0.0 };
            if (linalg::g_inner(g, u, v) - expected).norm() > 1e-10 {
                return Err(Error::DegenerateBasis(format!("vectors {a} and {b} are not g-orthonormal")));
            }
        }
    }
    let mut reference = 0.0;
    for u in basis {
        for v in basis {
            reference += r.eval(u, u, v, v).re;
        }
    }
    let mut sum = 0.0;
    for s in 1..=samples as u64 {
        let c = sphere_point(s, k);
        let v: Vec<C64> = (0..r.n).map(|i| (0..k).map(|a| basis[a][i] * c[a]).sum()).collect();
        sum += r.quartic(&v);
    }
    let estimate = sum / samples as f64;
    let constant = if estimate.abs() > 1e-300 { reference / estimate } else { f64::NAN };
    Ok(BergerResult { estimate, reference, constant })
}
