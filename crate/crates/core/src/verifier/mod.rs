//! Global checks on torus models: the integral identity for holomorphic
//! forms, its curvature inequality, constancy of `|η|²`, the gradient
//! constant pre-flight, and corpus sweeps with structured reports.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::{kappa, KappaOptions, KappaStatus};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::forms::{beta_from, covariant_from, gradient_pairing, pair, NormField, PForm};
use crate::geometry::{CurvatureAt, MetricJet, Model};
use crate::linalg::{self, CMat};
use crate::quadrature::{evaluate, pairwise_sum, Grid};

mod report;
mod sweep;

pub use report::{fingerprint, CheckRecord, Provenance, Report, Status, Summary, CSV_HEADER};
pub use sweep::{corpus_sweep, CheckKind, CheckSpec, Corpus, NamedForm, NamedModel, Settings};

/// Convention flags threaded through every global check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    /// `c` in `|d u|² = c · g^{ij̄} ∂_i u ∂_j̄ u`.
    pub grad_constant: f64,
    /// Multiplies the curvature tensor; `−1` is a fault-injection switch.
    pub curvature_sign: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions { grad_constant: 1.0, curvature_sign: 1.0 }
    }
}

fn signed_curvature(jet: &MetricJet, conv: &Conventions) -> CurvatureAt {
    let mut r = jet.curvature();
    if conv.curvature_sign != 1.0 {
        r.data.iter_mut().for_each(|v| *v *= conv.curvature_sign);
    }
    r
}

/// Pointwise integrands of the identity at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityIntegrands {
    /// `−c · g^{ij̄} ∂_i u ∂_j̄ u`, `u = |η|²`.
    pub lhs: f64,
    /// `β^{ij̄} ⟨D'_i η, D'_j η⟩`.
    pub rhs1: f64,
    /// `β^{ij̄} β^{kl̄} R_{ij̄kl̄}`.
    pub rhs2: f64,
}

/// Per-node quantities shared by the identity and the inequality.
struct NodeData {
    jet: MetricJet,
    r: CurvatureAt,
    beta: CMat,
    beta_up: CMat,
    integrands: IdentityIntegrands,
}

fn node_data(eta: &PForm, m: &Model, field: &NormField, x: &[f64], conv: &Conventions) -> Result<NodeData> {
    let n = m.dim();
    let jet = m.jet(x)?;
    let form_jet = eta.jet(x)?;
    let (_, du) = field.eval(x)?;
    let d = covariant_from(&jet, &form_jet);
    let b = beta_from(&form_jet.value, &jet.ginv, x);
    let up = b.raised(&jet.ginv);
    let r = signed_curvature(&jet, conv);

    let mut rhs1 = C64::new(0.0, 0.0);
    let mut rhs2 = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            rhs1 += up[(i, j)] * pair(&d[i], &d[j], &jet.ginv);
            for k in 0..n {
                for l in 0..n {
                    rhs2 += up[(i, j)] * up[(k, l)] * r.get(i, j, k, l);
                }
            }
        }
    }
    let integrands = IdentityIntegrands {
        lhs: -conv.grad_constant * gradient_pairing(&du, &jet.ginv),
        rhs1: rhs1.re,
        rhs2: rhs2.re,
    };
    Ok(NodeData { jet, r, beta: b.matrix, beta_up: up, integrands })
}

/// Identity integrands at `x`.
pub fn identity_integrands(eta: &PForm, m: &Model, x: &[f64], conv: &Conventions) -> Result<IdentityIntegrands> {
    let field = NormField::new(eta, m)?;
    Ok(node_data(eta, m, &field, x, conv)?.integrands)
}

/// For `p = 1`: `R(v, v̄, v, v̄)` with `vⁱ = g^{ij̄} η̄_j`, which must equal
/// the `rhs2` integrand.
pub fn dual_vector_quartic(eta: &PForm, m: &Model, x: &[f64], conv: &Conventions) -> Result<f64> {
    if eta.degree() != 1 {
        return Err(Error::DegreeOutOfRange(format!("dual vector needs degree 1, got {}", eta.degree())));
    }
    let jet = m.jet(x)?;
    let val = eta.value(x)?;
    let n = m.dim();
    let v: Vec<C64> = (0..n).map(|i| (0..n).map(|j| jet.ginv[(i, j)] * val.get(&[j]).conj()).sum()).collect();
    let r = signed_curvature(&jet, conv);
    Ok(r.eval(&v, &v, &v, &v).re)
}

fn require_global(m: &Model, eta: &PForm) -> Result<()> {
    if !m.is_torus_type() {
        return Err(Error::UnsupportedModel(format!("{}: global checks need a torus-type model", m.kind_name())));
    }
    if eta.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: eta.dim() });
    }
    if !eta.is_constant() {
        return Err(Error::Domain("global forms on a torus must have constant coefficients".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub model: String,
    pub form: String,
    pub grid: usize,
    pub nodes: usize,
    pub lhs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    /// `|lhs − rhs1 − rhs2| / (1 + |lhs| + |rhs1| + |rhs2|)`.
    pub residual: f64,
    /// Smallest `rhs1` integrand over the nodes (nonnegative in theory).
    pub min_rhs1_integrand: f64,
    /// Largest `lhs` integrand over the nodes (nonpositive in theory).
    pub max_lhs_integrand: f64,
    /// Degree one only: max pointwise gap between the `rhs2` integrand and
    /// the dual-vector quartic.
    pub dual_vector_gap: Option<f64>,
    pub conventions: Conventions,
}

/// Integrate the three identity terms on an `N`-point-per-direction grid.
pub fn identity_e1(m: &Model, eta: &PForm, n_grid: usize, conv: &Conventions) -> Result<IdentityReport> {
    require_global(m, eta)?;
    let field = NormField::new(eta, m)?;
    let grid = Grid::reduced(m, n_grid, &[]);
    let p1 = eta.degree() == 1;
    let rows = evaluate(&grid, |x| {
        let d = node_data(eta, m, &field, x, conv)?;
        let gap = if p1 { (d.integrands.rhs2 - dual_vector_quartic(eta, m, x, conv)?).abs() } else { 0.0 };
        Ok((d.integrands, m.metric(x)?.det(), gap))
    })?;
    let total = |f: &dyn Fn(&IdentityIntegrands) -> f64| {
        grid.weight() * pairwise_sum(&rows.iter().map(|r| f(&r.0) * r.1).collect::<Vec<_>>())
    };
    let (lhs, rhs1, rhs2) = (total(&|t| t.lhs), total(&|t| t.rhs1), total(&|t| t.rhs2));
    let scale = 1.0 + lhs.abs() + rhs1.abs() + rhs2.abs();
    Ok(IdentityReport {
        model: m.kind_name(),
        form: format!("{eta:?}"),
        grid: n_grid,
        nodes: grid.len(),
        lhs,
        rhs1,
        rhs2,
        residual: (lhs - rhs1 - rhs2).abs() / scale,
        min_rhs1_integrand: rows.iter().map(|r| r.0.rhs1).fold(f64::INFINITY, f64::min),
        max_lhs_integrand: rows.iter().map(|r| r.0.lhs).fold(f64::NEG_INFINITY, f64::max),
        dual_vector_gap: p1.then(|| rows.iter().map(|r| r.2).fold(0.0, f64::max)),
        conventions: *conv,
    })
}

/// Where the per-node κ came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaProvenance {
    /// One complex dimension: a single direction.
    SymmetricExact,
    GridVerified,
    Heuristic,
}

impl KappaProvenance {
    pub fn trustworthy(self) -> bool {
        self != KappaProvenance::Heuristic
    }

    fn combine(self, status: KappaStatus) -> Self {
        let this = match status {
            KappaStatus::Exact => KappaProvenance::SymmetricExact,
            KappaStatus::GridVerified => KappaProvenance::GridVerified,
            KappaStatus::Heuristic => KappaProvenance::Heuristic,
        };
        let rank = |p: KappaProvenance| match p {
            KappaProvenance::SymmetricExact => 0,
            KappaProvenance::GridVerified => 1,
            KappaProvenance::Heuristic => 2,
        };
        if rank(this) > rank(self) {
            this
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub model: String,
    pub form: String,
    pub grid: usize,
    /// `−c ∫ |∂u|²`, nonpositive.
    pub middle: f64,
    /// `½ ∫ κ [(tr β)² + |β|²]`.
    pub bound: f64,
    pub slack: f64,
    pub scale: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub provenance: KappaProvenance,
}

impl InequalityReport {
    /// `slack ≥ −tol·scale` and `middle ≤ tol·scale`; vacuous for a
    /// heuristic κ field.
    pub fn holds(&self, tol: f64) -> bool {
        !self.provenance.trustworthy() || (self.slack >= -tol * self.scale && self.middle <= tol * self.scale)
    }
}

pub fn inequality_e2(
    m: &Model,
    eta: &PForm,
    n_grid: usize,
    opts: KappaOptions,
    conv: &Conventions,
) -> Result<InequalityReport> {
    require_global(m, eta)?;
    let field = NormField::new(eta, m)?;
    let grid = Grid::reduced(m, n_grid, &[]);
    let per_node = evaluate(&grid, |x| {
        let d = node_data(eta, m, &field, x, conv)?;
        let k = kappa(&d.r, &d.jet.g, opts)?;
        let n = m.dim();
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                tr += d.jet.ginv[(i, j)] * d.beta[(i, j)];
            }
        }
        let norm: f64 = d.beta_up.iter().zip(d.beta.iter()).map(|(a, b)| (a * b.conj()).re).sum();
        let det = m.metric(x)?.det();
        Ok((d.integrands.lhs * det, 0.5 * k.value * (tr.re * tr.re + norm) * det, k.value, k.status))
    })?;
    let w = grid.weight();
    let middle = w * pairwise_sum(&per_node.iter().map(|v| v.0).collect::<Vec<_>>());
    let bound = w * pairwise_sum(&per_node.iter().map(|v| v.1).collect::<Vec<_>>());
    let provenance = per_node.iter().fold(KappaProvenance::SymmetricExact, |p, v| p.combine(v.3));
    Ok(InequalityReport {
        model: m.kind_name(),
        form: format!("{eta:?}"),
        grid: n_grid,
        middle,
        bound,
        slack: middle - bound,
        scale: 1.0 + middle.abs() + bound.abs(),
        kappa_min: per_node.iter().map(|v| v.2).fold(f64::INFINITY, f64::min),
        kappa_max: per_node.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max),
        provenance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyReport {
    pub max: f64,
    pub min: f64,
    pub spread: f64,
    pub kappa_min: f64,
    /// `H ≥ 0` on every node (to `1e−10`).
    pub hypothesis_satisfied: bool,
    pub note: String,
}

/// `max − min` of `|η|²` over the grid, alongside the sign of κ.
pub fn constancy_scan(m: &Model, eta: &PForm, n_grid: usize, opts: KappaOptions) -> Result<ConstancyReport> {
    require_global(m, eta)?;
    let field = NormField::new(eta, m)?;
    let grid = Grid::reduced(m, n_grid, &[]);
    let vals = evaluate(&grid, |x| {
        let u = field.eval(x)?.0;
        let jet = m.jet(x)?;
        Ok((u, kappa(&jet.curvature(), &jet.g, opts)?.value))
    })?;
    let max = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let kappa_min = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hypothesis_satisfied = kappa_min >= -1e-10;
    let note = if hypothesis_satisfied {
        "nonnegative holomorphic sectional curvature: |eta|^2 must be constant".to_string()
    } else {
        "hypothesis not satisfied; no claim".to_string()
    };
    Ok(ConstancyReport { max, min, spread: max - min, kappa_min, hypothesis_satisfied, note })
}

/// Outcome of the gradient-constant pre-flight.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Calibration {
    pub grad_constant: f64,
    /// `(candidate, residual)` for each candidate.
    pub residuals: Vec<(f64, f64)>,
    pub grid: usize,
    pub tolerance: f64,
}

pub const CALIBRATION_CANDIDATES: [f64; 2] = [1.0, 2.0];

/// The perturbed 1-torus `ψ = 0.05 sin(2πx)` with `η = dz`.
pub fn calibration_fixture() -> (Model, PForm) {
    let psi = parse("0.05*sin(2*pi*x1)", 1).expect("fixture parses");
    let m = Model::torus(linalg::identity(1), psi).expect("fixture is positive definite");
    (m, PForm::basis(1, &[0]).expect("valid"))
}

/// Run the identity under each candidate constant; exactly one must pass.
pub fn calibrate(n_grid: usize, tolerance: f64) -> Result<Calibration> {
    let (m, eta) = calibration_fixture();
    let mut residuals = Vec::new();
    for c in CALIBRATION_CANDIDATES {
        let conv = Conventions { grad_constant: c, ..Conventions::default() };
        residuals.push((c, identity_e1(&m, &eta, n_grid, &conv)?.residual));
    }
    let passing: Vec<f64> = residuals.iter().filter(|r| r.1 < tolerance).map(|r| r.0).collect();
    match passing.as_slice() {
        [c] => Ok(Calibration { grad_constant: *c, residuals, grid: n_grid, tolerance }),
        _ => Err(Error::Calibration(format!(
            "{} of {} candidates pass at tolerance {tolerance:e}: {residuals:?}",
            passing.len(),
            residuals.len()
        ))),
    }
}

impl Calibration {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Domain(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Calibration> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest {
            context: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests;
