//! Holomorphic sectional curvature and the pointwise curvature lemmas.
//!
//! All searches run in a g-orthonormal frame, where unit vectors are
//! Euclidean unit vectors and `H(u) = R(u, ū, u, ū)`.

mod bochner;
mod flat;
mod inequalities;
mod kappa;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{orthonormal_frame, CurvatureAt};
use crate::linalg::{self, CMat};

pub use bochner::{bochner_check, BochnerReport};
pub use flat::{lemma34_crosscheck, rc_positive, truly_flat_space, FlatSpaceResult, Lemma34Report, RcResult};
pub use inequalities::{berger_average, royden_check, yang_lemma_check, BergerResult};
pub use kappa::{kappa, KappaOptions, KappaResult, KappaStatus};
#[cfg(test)]
use kappa::grid_argmin_2;

/// `H(V) = R(V, V̄, V, V̄) / |V|⁴_g`.
pub fn hsc(r: &CurvatureAt, g: &CMat, v: &[C64]) -> Result<f64> {
    if v.len() != r.n {
        return Err(Error::DimensionMismatch { expected: r.n, found: v.len() });
    }
    let norm = linalg::g_inner(g, v, v).re;
    if !(norm > 0.0) || v.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(r.quartic(v) / (norm * norm))
}

/// Curvature expressed in a g-orthonormal frame.
#[derive(Debug, Clone)]
pub struct Frame {
    /// Frame vectors as columns.
    pub e: CMat,
    pub r: CurvatureAt,
}

impl Frame {
    pub fn new(r: &CurvatureAt, g: &CMat) -> Result<Frame> {
        if g.nrows() != r.n {
            return Err(Error::DimensionMismatch { expected: r.n, found: g.nrows() });
        }
        let e = orthonormal_frame(g)?;
        Ok(Frame { r: r.in_frame(&e), e })
    }

    pub fn n(&self) -> usize {
        self.r.n
    }

    pub fn to_tangent(&self, u: &[C64]) -> Vec<C64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|a| self.e[(i, a)] * u[a]).sum()).collect()
    }

    /// `Q(u) = R(u, ū, u, ū)` in the frame.
    pub fn quartic(&self, u: &[C64]) -> f64 {
        self.r.quartic(u)
    }

    /// `G_m = ∂Q/∂ū_m = 2 R_{im̄kl̄} uⁱ uᵏ ū^l`.
    fn quartic_grad(&self, u: &[C64]) -> (f64, Vec<C64>) {
        let n = self.n();
        let mut grad = vec![C64::new(0.0, 0.0); n];
        let mut q = C64::new(0.0, 0.0);
        for i in 0..n {
            for m in 0..n {
                for k in 0..n {
                    let a = u[i] * u[k];
                    for l in 0..n {
                        let t = self.r.get(i, m, k, l) * a * u[l].conj();
                        grad[m] += t * 2.0;
                        q += t * u[m].conj();
                    }
                }
            }
        }
        (q.re, grad)
    }
}

pub(crate) fn normalize(u: &mut [C64]) -> f64 {
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in u.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

/// A point on the sphere with its objective value.
type Scored = (f64, Vec<C64>);

/// Armijo-projected descent on the unit sphere for an objective that
/// returns its value and `∂f/∂ū`.
pub(crate) fn sphere_descent(obj: &dyn Fn(&[C64]) -> Scored, start: &[C64], max_iter: usize) -> Scored {
    let mut u = start.to_vec();
    normalize(&mut u);
    let (mut f, mut g) = obj(&u);
    let mut t = 0.25;
    for _ in 0..max_iter {
        let radial: C64 = u.iter().zip(&g).map(|(a, b)| a.conj() * b).sum();
        let gt: Vec<C64> = g.iter().zip(&u).map(|(b, a)| b - radial * a).collect();
        let gnorm = gt.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if gnorm < 1e-24 {
            break;
        }
        let mut accepted = false;
        while t > 1e-18 {
            let mut cand: Vec<C64> = u.iter().zip(&gt).map(|(a, b)| a - b * t).collect();
            normalize(&mut cand);
            let (fc, gc) = obj(&cand);
            if fc <= f - 1e-4 * t * gnorm {
                let stalled = f - fc <= 1e-16 * (1.0 + f.abs());
                u = cand;
                f = fc;
                g = gc;
                t = (t * 2.0).min(4.0);
                accepted = !stalled;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (f, u)
}

/// Unit vectors on `ℂ²` parametrized by `(cos θ, e^{iφ} sin θ)`, covering
/// the projective line with `res²` points.
pub(crate) fn projective_grid_2(res: usize) -> impl Iterator<Item = [C64; 2]> {
    (0..res).flat_map(move |a| {
        let theta = std::f64::consts::FRAC_PI_2 * a as f64 / (res - 1) as f64;
        (0..res).map(move |b| {
            let phi = std::f64::consts::TAU * b as f64 / res as f64;
            [C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), phi)]
        })
    })
}

#[cfg(test)]
mod tests;
