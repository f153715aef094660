use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{sphere_descent, Frame};
use crate::error::Result;
use crate::geometry::CurvatureAt;
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaStatus {
    /// One complex dimension: `H` has a single value.
    Exact,
    /// Cross-checked against a dense grid on the projective line.
    GridVerified,
    /// Multi-start descent only; an upper bound on the minimum.
    Heuristic,
}

#[derive(Debug, Clone, Copy)]
pub struct KappaOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Grid resolution per angle for `n = 2`.
    pub grid: usize,
}

impl Default for KappaOptions {
    fn default() -> Self {
        KappaOptions { restarts: 32, seed: 0, grid: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct KappaResult {
    pub value: f64,
    /// g-unit tangent vector attaining `value`.
    pub argmin: Vec<C64>,
    pub restarts: usize,
    /// Second-best distinct local minimum minus the best (∞ if none).
    pub gap: f64,
    pub status: KappaStatus,
}

/// `κ = min_{|V|_g = 1} H(V)` by multi-start projected descent, with a grid
/// oracle for `n = 2`.
pub fn kappa(r: &CurvatureAt, g: &CMat, opts: KappaOptions) -> Result<KappaResult> {
    let frame = Frame::new(r, g)?;
    let n = frame.n();
    let obj = |u: &[C64]| frame.quartic_grad(u);
    if n == 1 {
        let u = [C64::new(1.0, 0.0)];
        return Ok(KappaResult {
            value: obj(&u).0,
            argmin: frame.to_tangent(&u),
            restarts: 0,
            gap: f64::INFINITY,
            status: KappaStatus::Exact,
        });
    }

    let mut starts: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| C64::new((i == j) as u8 as f64, 0.0)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    starts.extend((0..opts.restarts).map(|_| linalg::random_unit(&mut rng, n)));

    let mut status = KappaStatus::Heuristic;
    if n == 2 && opts.grid >= 2 {
        starts.push(grid_argmin_2(&frame, opts.grid).to_vec());
        status = KappaStatus::GridVerified;
    }

    let mut results: Vec<(f64, Vec<C64>)> = starts.iter().map(|s| sphere_descent(&obj, s, 2000)).collect();
    results.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (value, u) = results[0].clone();
    let scale = 1.0 + value.abs();
    let gap = results
        .iter()
        .map(|r| r.0 - value)
        .find(|d| *d > 1e-9 * scale)
        .unwrap_or(f64::INFINITY);
    Ok(KappaResult { value, argmin: frame.to_tangent(&u), restarts: opts.restarts, gap, status })
}

/// Grid minimum of `H(cos θ, e^{iφ} sin θ)` in a 2-dimensional frame. For
/// fixed θ the quartic is a trigonometric polynomial in φ of degree 2,
/// so each row costs five coefficients.
pub(super) fn grid_argmin_2(frame: &Frame, res: usize) -> [C64; 2] {
    let phases: Vec<[C64; 3]> = (0..res)
        .map(|b| {
            let phi = std::f64::consts::TAU * b as f64 / res as f64;
            [C64::new(1.0, 0.0), C64::from_polar(1.0, phi), C64::from_polar(1.0, 2.0 * phi)]
        })
        .collect();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for a in 0..res {
        let theta = std::f64::consts::FRAC_PI_2 * a as f64 / (res - 1) as f64;
        let (c, s) = (theta.cos(), theta.sin());
        // coefficient of e^{ifφ}, f = −2..2
        let mut coef = [C64::new(0.0, 0.0); 5];
        for idx in 0..16usize {
            let bits = [idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1];
            let ones = bits.iter().sum::<usize>() as i32;
            let mag = c.powi(4 - ones) * s.powi(ones);
            let f = bits[0] as i32 - bits[1] as i32 + bits[2] as i32 - bits[3] as i32;
            coef[(f + 2) as usize] += frame.r.get(bits[0], bits[1], bits[2], bits[3]) * mag;
        }
        for (b, e) in phases.iter().enumerate() {
            // H is real: Re(a₀) + 2 Re(a₁e^{iφ}) + 2 Re(a₂e^{2iφ}) with a_{−f} = conj(a_f)
            let h = coef[2].re + 2.0 * (coef[3] * e[1]).re + 2.0 * (coef[4] * e[2]).re;
            if h < best.0 {
                best = (h, theta, std::f64::consts::TAU * b as f64 / res as f64);
            }
        }
    }
    [C64::new(best.1.cos(), 0.0), C64::from_polar(best.1.sin(), best.2)]
}
