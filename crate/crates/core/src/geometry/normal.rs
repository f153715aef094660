use num_complex::Complex64 as C64;

use super::{orthonormal_frame, Model};
use crate::error::{Error, Result};
use crate::expr::{Expr, WirtingerVar};
use crate::forms::{beta_from, PForm};
use crate::linalg::{self, CMat};

/// A chart centred at a point, in Kähler normal coordinates.
#[derive(Debug, Clone)]
pub struct NormalChart {
    /// The pulled-back potential as a chart model; the centre is `w = 0`.
    pub model: Model,
    /// The pulled-back form, if one was supplied.
    pub form: Option<PForm>,
    /// Linear part `A` of `z = z₀ + A(w − ½Γ'(w, w))`.
    pub linear: CMat,
    /// Eigenvalues of β at the centre in the new frame, descending.
    pub beta_diag: Vec<f64>,
}

/// Holomorphic coordinates `w` centred at `x0` with `g(0) = I`,
/// `∂g(0) = 0`, and (when `eta` is given) `β(0)` diagonal with descending
/// entries.
///
/// The change is `z = z₀ + A(w − ½Γ'(w, w))`, where `A` takes the metric
/// to the identity (Cholesky, then a unitary diagonalizing β) and `Γ'` are
/// the Christoffel symbols at `x0` in the linear coordinates `z = z₀ + Au`.
pub fn normal_coordinates(m: &Model, x0: &[f64], eta: Option<&PForm>) -> Result<NormalChart> {
    let n = m.dim();
    let jet = m.jet(x0)?;
    let e = orthonormal_frame(&jet.g)?;

    let (u, beta_diag) = match eta {
        Some(f) => {
            if f.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
            }
            let beta = beta_from(&f.value(x0)?, &jet.ginv, x0).matrix;
            let bt = e.transpose() * beta * e.map(|z| z.conj());
            let (vals, vecs) = linalg::hermitian_eigen(&bt);
            let mut u = CMat::zeros(n, n);
            let mut diag = Vec::with_capacity(n);
            for (dst, src) in (0..n).rev().enumerate() {
                let mut col: Vec<C64> = vecs.column(src).iter().copied().collect();
                linalg::fix_phase(&mut col);
                for (r, z) in col.into_iter().enumerate() {
                    u[(r, dst)] = z;
                }
                diag.push(vals[src]);
            }
            (u, diag)
        }
        None => (linalg::identity(n), Vec::new()),
    };
    let a = &e * u.map(|z| z.conj());
    let a_inv = linalg::inverse(&a)?;

    let gamma = jet.christoffel();
    let mut gp = vec![C64::new(0.0, 0.0); n * n * n];
    for c in 0..n {
        for p in 0..n {
            for q in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            s += a_inv[(c, k)] * gamma.get(k, i, j) * a[(i, p)] * a[(j, q)];
                        }
                    }
                }
                gp[(c * n + p) * n + q] = s;
            }
        }
    }

    // u_c(w) = w_c − ½ Γ'^c_{pq} w_p w_q
    let w: Vec<Expr> = (0..n).map(Expr::z).collect();
    let lin: Vec<Expr> = (0..n)
        .map(|c| {
            let mut acc = w[c].clone();
            for p in 0..n {
                for q in 0..n {
                    let g = gp[(c * n + p) * n + q];
                    if g.norm() > 0.0 {
                        acc = acc - (w[p].clone() * w[q].clone()).scale(g * 0.5);
                    }
                }
            }
            acc
        })
        .collect();
    let z: Vec<Expr> = (0..n)
        .map(|k| {
            let z0 = C64::new(x0[2 * k], x0[2 * k + 1]);
            (0..n).fold(Expr::constant(z0), |acc, c| acc + lin[c].scale(a[(k, c)]))
        })
        .collect();
    let map: Vec<Expr> = z.iter().flat_map(|zk| [zk.re(), zk.im()]).collect();
    let potential = m.potential().substitute(&map)?;
    let model = Model::chart(n, potential)?;

    let form = match eta {
        Some(f) => {
            let jac: Vec<Vec<Expr>> =
                z.iter().map(|zk| (0..n).map(|a| zk.wirtinger(WirtingerVar::dz(a))).collect()).collect();
            Some(f.pullback(&map, &jac)?)
        }
        None => None,
    };
    Ok(NormalChart { model, form, linear: a, beta_diag })
}
