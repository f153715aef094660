use crate::error::{Error, Result};
use crate::expr::{Tape, WirtingerVar};
use crate::forms::{self, beta_from, pair, PForm, SymbolicMetric};
use crate::geometry::{normal_coordinates, Model};

#[derive(Debug, Clone)]
pub struct BochnerReport {
    /// `∂_i∂_ī |η|²` at the centre, per direction.
    pub lhs: Vec<f64>,
    /// `|D'_i η|² + Σ_k R_{iīkk̄} β_{kk̄}` at the centre.
    pub rhs: Vec<f64>,
    /// `max_i |lhs − rhs| / (1 + |lhs|)`.
    pub residual: f64,
    /// `max |∂g(0)|` of the normal chart.
    pub dg_max: f64,
}

/// Both sides of the Bochner formula in normal coordinates at `x0` with β
/// diagonal; the left side by symbolic differentiation of `|η|²`.
pub fn bochner_check(m: &Model, eta: &PForm, x0: &[f64]) -> Result<BochnerReport> {
    let n = m.dim();
    if eta.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: eta.dim() });
    }
    let nc = normal_coordinates(m, x0, Some(eta))?;
    let chart = &nc.model;
    let form = nc.form.as_ref().expect("form supplied");
    let origin = vec![0.0; 2 * n];

    let u = SymbolicMetric::new(chart.potential(), n).norm_sq(form);
    let second: Vec<_> = (0..n)
        .map(|i| u.wirtinger(WirtingerVar::dz(i)).wirtinger(WirtingerVar::dzbar(i)))
        .collect();
    let mut point = origin.clone();
    let tape = Tape::new(&second);
    point.resize(point.len().max(tape.arity()), 0.0);
    let lhs: Vec<f64> = tape.eval(&point)?.iter().map(|z| z.re).collect();

    let jet = chart.jet(&origin)?;
    let dg_max = jet.dg.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let form_jet = form.jet(&origin)?;
    let d = forms::covariant_from(&jet, &form_jet);
    let beta = beta_from(&form_jet.value, &jet.ginv, &origin);
    let r = jet.curvature();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = pair(&d[i], &d[i], &jet.ginv).re;
            for k in 0..n {
                s += (r.get(i, i, k, k) * beta.matrix[(k, k)]).re;
            }
            s
        })
        .collect();
    let residual = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
        .fold(0.0, f64::max);
    Ok(BochnerReport { lhs, rhs, residual, dg_max })
}
