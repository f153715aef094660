//! TOML corpus manifests.
//!
//! ```toml
//! [settings]
//! grid = 64
//! seed = 0
//!
//! [[model]]
//! id = "wavy"
//! type = "torus"            # torus | fubini-study | product | chart
//! dim = 1
//! potential = "0.05*sin(2*pi*x1)"
//!
//! [[form]]
//! id = "dz"
//! dim = 1
//! terms = [{ indices = [1], coeff = "1" }]
//!
//! [[check]]
//! kind = "identity"
//! model = "wavy"
//! form = "dz"
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::forms::{dbar_residual, sample_points, PForm};
use crate::geometry::Model;
use crate::linalg::CMat;
use crate::verifier::{CheckKind, CheckSpec, Conventions, Corpus, NamedForm, NamedModel, Settings};

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSettings {
    grid: Option<usize>,
    seed: Option<u64>,
    restarts: Option<usize>,
    kappa_grid: Option<usize>,
    samples: Option<usize>,
    grad_constant: Option<f64>,
    curvature_sign: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    id: String,
    #[serde(rename = "type")]
    kind: String,
    dim: Option<usize>,
    potential: Option<String>,
    base: Option<Vec<Vec<f64>>>,
    base_im: Option<Vec<Vec<f64>>>,
    scale: Option<f64>,
    factors: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    /// 1-based.
    indices: Vec<usize>,
    coeff: String,
    coeff_im: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    id: String,
    dim: usize,
    degree: Option<usize>,
    terms: Vec<RawTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    id: Option<String>,
    kind: CheckKind,
    model: String,
    form: Option<String>,
    grid: Option<usize>,
    grids: Option<Vec<usize>>,
    tolerance: Option<f64>,
    kappa: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    settings: RawSettings,
    #[serde(default)]
    model: Vec<RawModel>,
    #[serde(default)]
    form: Vec<RawForm>,
    #[serde(default)]
    check: Vec<RawCheck>,
    #[serde(default)]
    output: RawOutput,
}

/// A validated manifest.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub path: Option<PathBuf>,
    pub source: String,
    pub corpus: Corpus,
    /// Convention overrides; `None` means "use the calibrated value".
    pub grad_constant: Option<f64>,
    pub curvature_sign: f64,
    pub output_dir: Option<PathBuf>,
}

impl Manifest {
    pub fn conventions(&self, calibrated: f64) -> Conventions {
        Conventions { grad_constant: self.grad_constant.unwrap_or(calibrated), curvature_sign: self.curvature_sign }
    }
}

/// Context string `file:line: what` for the `nth` table holding
/// `id = "<id>"`.
fn locate(label: &str, source: &str, table: &str, id: &str, nth: usize) -> String {
    let needle = format!("\"{id}\"");
    let header = format!("[[{table}]]");
    let mut inside = false;
    let line = source
        .lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim_start();
            if t.starts_with('[') {
                inside = t.starts_with(&header);
            }
            inside && t.starts_with("id") && t.contains(&needle)
        })
        .nth(nth)
        .map(|(k, _)| format!(":{}", k + 1))
        .unwrap_or_default();
    format!("{label}{line}: {table} `{id}`")
}

pub fn parse_manifest(path: &Path) -> Result<Manifest> {
    let source = std::fs::read_to_string(path).map_err(|e| Error::Manifest {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut m = parse_manifest_str(&source, &path.display().to_string())?;
    m.path = Some(path.to_path_buf());
    Ok(m)
}

pub fn parse_manifest_str(source: &str, label: &str) -> Result<Manifest> {
    let raw: RawManifest = toml::from_str(source).map_err(|e| {
        let line = e
            .span()
            .map(|s| format!(":{}", source[..s.start.min(source.len())].matches('\n').count() + 1))
            .unwrap_or_default();
        Error::Manifest { context: format!("{label}{line}"), message: e.message().to_string() }
    })?;

    let defaults = Settings::default();
    let s = &raw.settings;
    let settings = Settings {
        grid: s.grid.unwrap_or(defaults.grid),
        seed: s.seed.unwrap_or(defaults.seed),
        restarts: s.restarts.unwrap_or(defaults.restarts),
        kappa_grid: s.kappa_grid.unwrap_or(defaults.kappa_grid),
        samples: s.samples.unwrap_or(defaults.samples),
    };
    let settings_err = |message: String| Error::Manifest { context: format!("{label}: [settings]"), message };
    if settings.grid == 0 {
        return Err(settings_err("grid must be positive".into()));
    }
    if let Some(c) = s.grad_constant {
        if !(c > 0.0) {
            return Err(settings_err(format!("grad_constant must be positive, got {c}")));
        }
    }
    let curvature_sign = s.curvature_sign.unwrap_or(1.0);
    if curvature_sign != 1.0 && curvature_sign != -1.0 {
        return Err(settings_err(format!("curvature_sign must be 1 or -1, got {curvature_sign}")));
    }

    let mut models: Vec<NamedModel> = Vec::new();
    for rm in &raw.model {
        let ctx = locate(label, source, "model", &rm.id, models.iter().filter(|m| m.id == rm.id).count());
        let wrap = |e: Error| match e {
            Error::Manifest { .. } => e,
            other => Error::Manifest { context: ctx.clone(), message: other.to_string() },
        };
        if models.iter().any(|m| m.id == rm.id) {
            return Err(Error::Manifest { context: ctx, message: "duplicate model id".into() });
        }
        let model = build_model(rm, &models, &ctx).map_err(wrap)?;
        models.push(NamedModel { id: rm.id.clone(), model });
    }

    let mut forms: Vec<NamedForm> = Vec::new();
    for rf in &raw.form {
        let ctx = locate(label, source, "form", &rf.id, forms.iter().filter(|f| f.id == rf.id).count());
        if forms.iter().any(|f| f.id == rf.id) {
            return Err(Error::Manifest { context: ctx, message: "duplicate form id".into() });
        }
        let form = build_form(rf).map_err(|e| Error::Manifest { context: ctx.clone(), message: e.to_string() })?;
        forms.push(NamedForm { id: rf.id.clone(), form });
    }

    let mut checks = Vec::new();
    let mut seen = HashSet::new();
    for rc in &raw.check {
        let id = rc.id.clone().unwrap_or_else(|| {
            let mut s = format!("{}-{}", rc.kind.as_str(), rc.model);
            if let Some(f) = &rc.form {
                s += &format!("-{f}");
            }
            s
        });
        if !seen.insert(id.clone()) {
            return Err(Error::Manifest { context: format!("{label}: check `{id}`"), message: "duplicate check id".into() });
        }
        let heuristic_kappa = match rc.kappa.as_deref() {
            None | Some("grid") => false,
            Some("descent") => true,
            Some(other) => {
                return Err(Error::Manifest {
                    context: format!("{label}: check `{id}`"),
                    message: format!("kappa must be \"grid\" or \"descent\", got \"{other}\""),
                })
            }
        };
        checks.push(CheckSpec {
            id,
            kind: rc.kind,
            model: rc.model.clone(),
            form: rc.form.clone(),
            grid: rc.grid,
            grids: rc.grids.clone().unwrap_or_else(|| vec![16, 32, 64]),
            tolerance: rc.tolerance.unwrap_or_else(|| rc.kind.default_tolerance()),
            heuristic_kappa,
        });
    }

    let corpus = Corpus { settings, models, forms, checks };
    corpus.validate().map_err(|e| match e {
        Error::Manifest { context, message } => Error::Manifest { context: format!("{label}: {context}"), message },
        other => other,
    })?;
    Ok(Manifest {
        path: None,
        source: source.to_string(),
        corpus,
        grad_constant: s.grad_constant,
        curvature_sign,
        output_dir: raw.output.dir.map(PathBuf::from),
    })
}

fn require_dim(rm: &RawModel, ctx: &str) -> Result<usize> {
    match rm.dim {
        Some(n) if (1..=crate::exterior::MAX_DIM).contains(&n) => Ok(n),
        Some(n) => Err(Error::Manifest { context: ctx.into(), message: format!("dimension {n} out of range") }),
        None => Err(Error::Manifest { context: ctx.into(), message: "missing key `dim`".into() }),
    }
}

fn build_model(rm: &RawModel, earlier: &[NamedModel], ctx: &str) -> Result<Model> {
    match rm.kind.as_str() {
        "torus" | "flat-torus" => {
            let n = require_dim(rm, ctx)?;
            let base = match &rm.base {
                Some(rows) => matrix(rows, rm.base_im.as_deref(), n, ctx)?,
                None => crate::linalg::identity(n),
            };
            let psi = match (&rm.potential, rm.kind.as_str()) {
                (Some(_), "flat-torus") => {
                    return Err(Error::Manifest { context: ctx.into(), message: "a flat torus takes no potential".into() })
                }
                (Some(text), _) => parse(text, n)?,
                (None, _) => Expr::zero(),
            };
            Model::torus(base, psi)
        }
        "fubini-study" => Model::fubini_study(require_dim(rm, ctx)?, rm.scale.unwrap_or(1.0)),
        "chart" => {
            let n = require_dim(rm, ctx)?;
            let text = rm
                .potential
                .as_ref()
                .ok_or_else(|| Error::Manifest { context: ctx.into(), message: "missing key `potential`".into() })?;
            Model::chart(n, parse(text, n)?)
        }
        "product" => {
            let names = rm.factors.as_deref().unwrap_or_default();
            if names.len() < 2 {
                return Err(Error::Manifest { context: ctx.into(), message: "a product needs at least two factors".into() });
            }
            let lookup = |name: &String| {
                earlier.iter().find(|m| &m.id == name).map(|m| m.model.clone()).ok_or_else(|| Error::Manifest {
                    context: ctx.into(),
                    message: format!("unknown factor `{name}` (factors must be declared earlier)"),
                })
            };
            let mut acc = lookup(&names[0])?;
            for name in &names[1..] {
                acc = Model::product(acc, lookup(name)?)?;
            }
            if let Some(n) = rm.dim {
                if n != acc.dim() {
                    return Err(Error::DimensionMismatch { expected: n, found: acc.dim() });
                }
            }
            Ok(acc)
        }
        other => Err(Error::Manifest {
            context: ctx.into(),
            message: format!("unknown model type `{other}` (expected torus, flat-torus, fubini-study, product or chart)"),
        }),
    }
}

fn matrix(re: &[Vec<f64>], im: Option<&[Vec<f64>]>, n: usize, ctx: &str) -> Result<CMat> {
    let shape_ok = |m: &[Vec<f64>]| m.len() == n && m.iter().all(|r| r.len() == n);
    if !shape_ok(re) || im.is_some_and(|m| !shape_ok(m)) {
        return Err(Error::Manifest { context: ctx.into(), message: format!("base metric must be {n}x{n}") });
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))))
}

fn build_form(rf: &RawForm) -> Result<PForm> {
    let n = rf.dim;
    let mut terms = Vec::new();
    let mut degree = rf.degree;
    for t in &rf.terms {
        if t.indices.iter().any(|&k| k == 0 || k > n) {
            return Err(Error::DegreeOutOfRange(format!("indices {:?} must lie in 1..={n}", t.indices)));
        }
        match degree {
            Some(p) if p != t.indices.len() => {
                return Err(Error::DegreeOutOfRange(format!("term {:?} has degree {}, expected {p}", t.indices, t.indices.len())))
            }
            _ => degree = Some(t.indices.len()),
        }
        let mut c = parse(&t.coeff, n)?;
        if let Some(im) = &t.coeff_im {
            c = c + Expr::imag_unit() * parse(im, n)?;
        }
        terms.push((t.indices.iter().map(|k| k - 1).collect(), c));
    }
    let form = PForm::new(n, degree.unwrap_or(0), terms)?;
    if !form.is_constant() {
        let r = dbar_residual(&form, &sample_points(n))?;
        if r.dbar > 1e-10 {
            return Err(Error::NotHolomorphic(r.dbar));
        }
    }
    Ok(form)
}
