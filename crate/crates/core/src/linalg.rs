//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// max |m − m*| over entries.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Column `k` of the returned matrix is the eigenvector for value `k`.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vecs)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.last().copied().unwrap_or(0.0)
}

/// Lower-triangular `L` with `m = L L*`; `None` unless `m` is positive
/// definite. (nalgebra's complex Cholesky takes complex square roots and
/// so never rejects an indefinite matrix.)
pub fn cholesky(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular matrix".into()))
}

/// Rotate the phase of an eigenvector so its first nonzero component is
/// real and positive.
pub fn fix_phase(v: &mut [C64]) {
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// `⟨u, v⟩ = Σ g_{ij̄} u^i v̄^j` for tangent vectors.
pub fn g_inner(g: &CMat, u: &[C64], v: &[C64]) -> C64 {
    let n = u.len();
    let mut s = zero();
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * u[i] * v[j].conj();
        }
    }
    s
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A random Hermitian matrix with entries in the unit box.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| random_complex(rng));
    (&a + a.adjoint()).scale(0.5)
}

/// A random Hermitian positive definite matrix, condition number modest.
pub fn random_hermitian_pd<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| random_complex(rng));
    &a * a.adjoint() + identity(n).scale(0.5)
}

/// A random unit vector (Euclidean norm).
pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| random_complex(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}
