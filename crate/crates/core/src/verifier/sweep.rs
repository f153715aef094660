use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{CheckRecord, Status};
use super::{constancy_scan, identity_e1, inequality_e2, Conventions};
use crate::analysis::{
    berger_average, bochner_check, kappa, lemma34_crosscheck, royden_check, yang_lemma_check, KappaOptions,
};
use crate::error::{Error, Result};
use crate::forms::{beta, PForm};
use crate::geometry::{orthonormal_frame, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub grid: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Angular resolution of the κ grid in dimension 2.
    pub kappa_grid: usize,
    /// Sampled points per pointwise check.
    pub samples: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { grid: 64, seed: 0, restarts: 32, kappa_grid: 200, samples: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct NamedModel {
    pub id: String,
    pub model: Model,
}

#[derive(Debug, Clone)]
pub struct NamedForm {
    pub id: String,
    pub form: PForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Identity,
    Inequality,
    Constancy,
    Convergence,
    Curvature,
    Bochner,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Identity => "identity",
            CheckKind::Inequality => "inequality",
            CheckKind::Constancy => "constancy",
            CheckKind::Convergence => "convergence",
            CheckKind::Curvature => "curvature",
            CheckKind::Bochner => "bochner",
        }
    }

    /// Needs a torus-type model and a constant-coefficient form.
    pub fn is_global(self) -> bool {
        matches!(self, CheckKind::Identity | CheckKind::Inequality | CheckKind::Constancy | CheckKind::Convergence)
    }

    pub fn needs_form(self) -> bool {
        self.is_global() || self == CheckKind::Bochner
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckKind::Identity | CheckKind::Inequality | CheckKind::Convergence => 1e-7,
            CheckKind::Constancy => 1e-10,
            CheckKind::Curvature | CheckKind::Bochner => 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub id: String,
    pub kind: CheckKind,
    pub model: String,
    pub form: Option<String>,
    pub grid: Option<usize>,
    /// Grid sizes for convergence studies.
    pub grids: Vec<usize>,
    pub tolerance: f64,
    /// Skip the κ grid and rely on descent alone.
    pub heuristic_kappa: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub settings: Settings,
    pub models: Vec<NamedModel>,
    pub forms: Vec<NamedForm>,
    pub checks: Vec<CheckSpec>,
}

impl Corpus {
    pub fn model(&self, id: &str) -> Option<&Model> {
        self.models.iter().find(|m| m.id == id).map(|m| &m.model)
    }

    pub fn form(&self, id: &str) -> Option<&PForm> {
        self.forms.iter().find(|f| f.id == id).map(|f| &f.form)
    }

    /// References resolve, dimensions agree, global checks sit on tori.
    pub fn validate(&self) -> Result<()> {
        let err = |check: &CheckSpec, message: String| Error::Manifest { context: format!("check `{}`", check.id), message };
        for c in &self.checks {
            let m = self.model(&c.model).ok_or_else(|| err(c, format!("unknown model `{}`", c.model)))?;
            match (&c.form, c.kind.needs_form()) {
                (None, true) => return Err(err(c, format!("a {} check needs a form", c.kind.as_str()))),
                (Some(f), _) => {
                    let form = self.form(f).ok_or_else(|| err(c, format!("unknown form `{f}`")))?;
                    if form.dim() != m.dim() {
                        return Err(err(c, format!("form `{f}` has dimension {}, model `{}` has {}", form.dim(), c.model, m.dim())));
                    }
                    if c.kind.is_global() && !form.is_constant() {
                        return Err(err(c, format!("form `{f}` must have constant coefficients for a global check")));
                    }
                }
                (None, false) => {}
            }
            if c.kind.is_global() && !m.is_torus_type() {
                return Err(err(c, format!("model `{}` ({}) has no torus quadrature", c.model, m.kind_name())));
            }
            if c.kind == CheckKind::Convergence && c.grids.len() < 3 {
                return Err(err(c, "a convergence check needs at least 3 grid sizes".into()));
            }
        }
        Ok(())
    }
}

fn kappa_opts(s: &Settings, spec: &CheckSpec) -> KappaOptions {
    KappaOptions { restarts: s.restarts, seed: s.seed, grid: if spec.heuristic_kappa { 0 } else { s.kappa_grid } }
}

fn sample_points(seed: u64, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Run every check in order. Numerical failures become `fail` rows;
/// configuration problems and evaluation errors are returned.
pub fn corpus_sweep(corpus: &Corpus, conv: &Conventions) -> Result<Vec<CheckRecord>> {
    corpus.validate()?;
    let mut out = Vec::new();
    for (index, spec) in corpus.checks.iter().enumerate() {
        let m = corpus.model(&spec.model).expect("validated");
        let form_id = spec.form.clone().unwrap_or_default();
        let eta = spec.form.as_deref().map(|f| corpus.form(f).expect("validated"));
        let grid = spec.grid.unwrap_or(corpus.settings.grid);
        let seed = corpus.settings.seed.wrapping_add(index as u64);
        let mut rec = CheckRecord::new(&spec.id, spec.kind.as_str(), &spec.model, &form_id);
        rec.tolerance = spec.tolerance;
        match spec.kind {
            CheckKind::Identity => {
                let r = identity_e1(m, eta.expect("validated"), grid, conv)?;
                rec.grid = Some(grid);
                (rec.lhs, rec.rhs1, rec.rhs2, rec.residual) = (Some(r.lhs), Some(r.rhs1), Some(r.rhs2), Some(r.residual));
                let scale = 1.0 + r.lhs.abs() + r.rhs1.abs() + r.rhs2.abs();
                let signs = r.min_rhs1_integrand >= -1e-12 * scale && r.max_lhs_integrand <= 1e-12 * scale;
                rec.status = Status::from_bool(r.residual < spec.tolerance && signs);
                rec.detail = serde_json::to_value(&r).expect("serializes");
            }
            CheckKind::Inequality => {
                let r = inequality_e2(m, eta.expect("validated"), grid, kappa_opts(&corpus.settings, spec), conv)?;
                rec.grid = Some(grid);
                (rec.lhs, rec.rhs1, rec.residual) = (Some(r.middle), Some(r.bound), Some(r.slack));
                rec.status = if r.provenance.trustworthy() { Status::from_bool(r.holds(spec.tolerance)) } else { Status::Info };
                rec.detail = serde_json::to_value(&r).expect("serializes");
            }
            CheckKind::Constancy => {
                let r = constancy_scan(m, eta.expect("validated"), grid, kappa_opts(&corpus.settings, spec))?;
                rec.grid = Some(grid);
                (rec.lhs, rec.rhs1, rec.residual) = (Some(r.max), Some(r.min), Some(r.spread));
                rec.status = if r.hypothesis_satisfied {
                    Status::from_bool(r.spread <= spec.tolerance * (1.0 + r.max.abs()))
                } else {
                    Status::Info
                };
                rec.detail = serde_json::to_value(&r).expect("serializes");
            }
            CheckKind::Convergence => {
                let eta = eta.expect("validated");
                let runs = spec.grids.iter().map(|&g| identity_e1(m, eta, g, conv)).collect::<Result<Vec<_>>>()?;
                let residuals: Vec<f64> = runs.iter().map(|r| r.residual).collect();
                let lhs: Vec<f64> = runs.iter().map(|r| r.lhs).collect();
                let diffs: Vec<f64> = lhs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
                let last = runs.last().expect("three grids");
                rec.grid = Some(last.grid);
                (rec.lhs, rec.rhs1, rec.rhs2, rec.residual) = (Some(last.lhs), Some(last.rhs1), Some(last.rhs2), Some(last.residual));
                rec.status = Status::from_bool(last.residual < spec.tolerance && *diffs.last().expect("two") < 1e-8);
                rec.detail = json!({ "grids": spec.grids, "residuals": residuals, "lhs": lhs, "differences": diffs });
            }
            CheckKind::Curvature => {
                out.extend(curvature_records(corpus, spec, m, eta, seed)?);
                continue;
            }
            CheckKind::Bochner => {
                let eta = eta.expect("validated");
                let mut worst = 0.0f64;
                let mut dg = 0.0f64;
                for x in sample_points(seed, m.dim(), corpus.settings.samples) {
                    let r = bochner_check(m, eta, &x)?;
                    worst = worst.max(r.residual);
                    dg = dg.max(r.dg_max);
                }
                rec.residual = Some(worst);
                rec.status = Status::from_bool(worst < spec.tolerance && dg < 1e-9);
                rec.detail = json!({ "samples": corpus.settings.samples, "max_dg": dg });
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Pointwise curvature scan: symmetries, κ, the flat-kernel/RC-positivity
/// cross-check, the minimizer and Royden inequalities, and Berger
/// averaging over the full tangent space.
fn curvature_records(
    corpus: &Corpus,
    spec: &CheckSpec,
    m: &Model,
    eta: Option<&PForm>,
    seed: u64,
) -> Result<Vec<CheckRecord>> {
    let n = m.dim();
    let opts = kappa_opts(&corpus.settings, spec);
    let tol = spec.tolerance;
    let eta = match eta {
        Some(f) => f.clone(),
        None => PForm::basis(n, &[0])?,
    };
    let form_id = spec.form.clone().unwrap_or_else(|| "dz1".into());
    let mut sym = 0.0f64;
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lemma = (0usize, 0usize, Vec::new());
    let (mut yang, mut royden) = (f64::INFINITY, f64::INFINITY);
    let mut berger = Vec::new();
    let expected_c = (n * (n + 1)) as f64 / 2.0;
    for x in sample_points(seed, n, corpus.settings.samples) {
        let jet = m.jet(&x)?;
        let r = jet.curvature();
        sym = sym.max(r.symmetry_defect() / (1.0 + r.max_abs()));
        let k = kappa(&r, &jet.g, opts)?;
        kmin = kmin.min(k.value);
        kmax = kmax.max(k.value);
        match lemma34_crosscheck(&r, &jet.g, 1e-9) {
            Ok(rep) => {
                lemma.0 += 1;
                if !rep.agree {
                    lemma.1 += 1;
                }
                lemma.2.push(rep.flat_dim);
            }
            Err(Error::HypothesisViolated(_)) => {}
            Err(e) => return Err(e),
        }
        yang = yang.min(yang_lemma_check(&r, &jet.g, &k.argmin, 200, seed)?);
        let b = beta(&eta, m, &x)?;
        let scale = 1.0 + b.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).powi(2) * (1.0 + r.max_abs());
        royden = royden.min(royden_check(&r, &jet.g, &b, k.value)? / scale);
        let e = orthonormal_frame(&jet.g)?;
        let basis: Vec<Vec<_>> = (0..n).map(|a| e.column(a).iter().copied().collect()).collect();
        let avg = berger_average(&r, &jet.g, &basis, 100_000)?;
        berger.push((avg.reference - expected_c * avg.estimate).abs() / (1.0 + r.max_abs()));
    }
    let mk = |suffix: &str, kind: &str| CheckRecord::new(&format!("{}.{suffix}", spec.id), kind, &spec.model, "");
    let mut recs = Vec::new();

    let mut r = mk("symmetry", "curvature-symmetry");
    (r.residual, r.tolerance, r.status) = (Some(sym), 1e-10, Status::from_bool(sym < 1e-10));
    recs.push(r);

    let mut r = mk("kappa", "kappa");
    (r.lhs, r.rhs1, r.status) = (Some(kmin), Some(kmax), Status::Info);
    r.detail = json!({ "kappa_grid": opts.grid, "restarts": opts.restarts });
    recs.push(r);

    let mut r = mk("lemma34", "flat-vs-rc");
    r.residual = Some(lemma.1 as f64);
    r.status = if lemma.0 == 0 { Status::Info } else { Status::from_bool(lemma.1 == 0) };
    r.detail = json!({ "points_checked": lemma.0, "flat_dims": lemma.2 });
    recs.push(r);

    let mut r = mk("yang", "yang-lemma");
    (r.residual, r.tolerance, r.status) = (Some(yang), tol, Status::from_bool(yang >= -tol));
    recs.push(r);

    let mut r = mk("royden", "royden");
    r.form = form_id;
    (r.residual, r.tolerance, r.status) = (Some(royden), tol, Status::from_bool(royden >= -tol));
    recs.push(r);

    // |Σ R(e_i, ē_i, e_j, ē_j) − c(n)·avg H| relative to the tensor size
    let mut r = mk("berger", "berger");
    let worst = berger.iter().copied().fold(0.0, f64::max);
    (r.lhs, r.residual, r.tolerance) = (Some(expected_c), Some(worst), 1e-3);
    r.status = Status::from_bool(worst < 1e-3);
    recs.push(r);
    Ok(recs)
}
