use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{kappa, projective_grid_2, sphere_descent, Frame, KappaOptions};
use crate::error::{Error, Result};
use crate::geometry::CurvatureAt;
use crate::linalg::{self, CMat};

#[derive(Debug, Clone)]
pub struct FlatSpaceResult {
    /// g-orthonormal tangent vectors spanning the flat subspace.
    pub basis: Vec<Vec<C64>>,
    /// Singular values of `V ↦ R(V, ∂̄_j, ∂_k, ∂̄_l)`, descending.
    pub singular_values: Vec<f64>,
}

impl FlatSpaceResult {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Numerical kernel of `V ↦ (R(V, ∂̄_j, ∂_k, ∂̄_l))_{jkl}`; singular values
/// below `rel_tol · σ_max` count as zero, and a tensor with `σ_max` below
/// `1e−12` is treated as identically flat.
pub fn truly_flat_space(r: &CurvatureAt, g: &CMat, rel_tol: f64) -> Result<FlatSpaceResult> {
    let frame = Frame::new(r, g)?;
    let n = frame.n();
    let rows = n * n * n;
    let m = DMatrix::<C64>::from_fn(rows, n, |row, i| {
        let (j, k, l) = (row / (n * n), (row / n) % n, row % n);
        frame.r.get(i, j, k, l)
    });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let basis = order
        .iter()
        .filter(|&&k| sigma_max < 1e-12 || svd.singular_values[k] < rel_tol * sigma_max)
        .map(|&k| {
            let u: Vec<C64> = v_t.row(k).iter().map(|z| z.conj()).collect();
            frame.to_tangent(&u)
        })
        .collect();
    Ok(FlatSpaceResult { basis, singular_values })
}

#[derive(Debug, Clone)]
pub struct RcResult {
    pub certified_positive: bool,
    /// g-unit tangent vector minimizing the top eigenvalue of `A(V)`.
    pub worst_v: Vec<C64>,
    pub max_eig_at_worst: f64,
}

/// Top eigenvalue of `A(u)_{kl̄} = R(u, ū, e_k, ē_l)` in the frame, and
/// `∂λ/∂ū` through the top eigenvector.
fn top_eig(frame: &Frame, u: &[C64]) -> (f64, Vec<C64>) {
    let n = frame.n();
    let a = frame.r.contract_pair(u);
    let (vals, vecs) = linalg::hermitian_eigen(&a);
    let w: Vec<C64> = vecs.column(n - 1).iter().copied().collect();
    let mut grad = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    grad[j] += frame.r.get(i, j, k, l) * u[i] * w[k] * w[l].conj();
                }
            }
        }
    }
    (vals[n - 1], grad)
}

/// Minimize over unit `V` the largest eigenvalue of `A(V)`; positive means
/// every `V` has some `W` with `R(V, V̄, W, W̄) > 0`.
pub fn rc_positive(r: &CurvatureAt, g: &CMat, restarts: usize, seed: u64, tol: f64) -> Result<RcResult> {
    let frame = Frame::new(r, g)?;
    let n = frame.n();
    let obj = |u: &[C64]| top_eig(&frame, u);
    let mut starts: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| C64::new((i == j) as u8 as f64, 0.0)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    starts.extend((0..restarts).map(|_| linalg::random_unit(&mut rng, n)));
    if n == 2 {
        let mut best = (f64::INFINITY, vec![]);
        for u in projective_grid_2(100) {
            let v = obj(&u).0;
            if v < best.0 {
                best = (v, u.to_vec());
            }
        }
        starts.push(best.1);
    }
    let (value, u) = starts
        .iter()
        .map(|s| {
            let (f0, _) = obj(s);
            let (f, u) = sphere_descent(&obj, s, 300);
            if f <= f0 {
                (f, u)
            } else {
                (f0, s.clone())
            }
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start");
    Ok(RcResult { certified_positive: value > tol, worst_v: frame.to_tangent(&u), max_eig_at_worst: value })
}

#[derive(Debug, Clone)]
pub struct Lemma34Report {
    pub kappa: f64,
    pub flat_dim: usize,
    pub rc_positive: bool,
    /// `(no flat vectors) == RC-positive`.
    pub agree: bool,
}

/// Truly-flat kernel versus RC-positivity, valid where `H ≥ 0`.
pub fn lemma34_crosscheck(r: &CurvatureAt, g: &CMat, tol: f64) -> Result<Lemma34Report> {
    let k = kappa(r, g, KappaOptions::default())?;
    if k.value < -tol {
        return Err(Error::HypothesisViolated(k.value));
    }
    let flat = truly_flat_space(r, g, 1e-8)?;
    let rc = rc_positive(r, g, 16, 0, tol)?;
    Ok(Lemma34Report {
        kappa: k.value,
        flat_dim: flat.dim(),
        rc_positive: rc.certified_positive,
        agree: (flat.dim() == 0) == rc.certified_positive,
    })
}
