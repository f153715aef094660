//! Model manifolds, metric jets and Kähler curvature.
//!
//! Every model carries a global (or chart) Kähler potential `φ` over real
//! coordinates; all geometric quantities are Wirtinger derivatives of `φ`,
//! compiled once into a [`Tape`].
//!
//! Conventions: `g_{ij̄} = ∂_i∂_j̄ φ`,
//! `R_{ij̄kl̄} = −∂_k∂_l̄ g_{ij̄} + g^{pq̄} ∂_k g_{iq̄} ∂_l̄ g_{pj̄}`,
//! which makes Fubini–Study positively curved, and
//! `Γ^k_{ij} = g^{kl̄} ∂_i g_{jl̄}`.

mod normal;

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::HermMetricAt;
use crate::expr::{Expr, Tape, WirtingerVar};
use crate::linalg::{self, CMat};

pub use normal::{normal_coordinates, NormalChart};

#[derive(Debug, Clone)]
pub enum ModelKind {
    /// `ℂⁿ / (ℤ + iℤ)ⁿ` with potential `g₀_{ij̄} zⁱ z̄ʲ + ψ`.
    Torus { base: CMat, psi: Expr },
    /// Affine chart of `ℂPⁿ`, potential `c · log(1 + |z|²)`.
    FubiniStudy { scale: f64 },
    Product(Box<Model>, Box<Model>),
    /// A bare local potential, for pointwise checks only.
    Chart,
}

#[derive(Clone)]
pub struct Model {
    n: usize,
    kind: ModelKind,
    potential: Expr,
    program: Arc<Program>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("n", &self.n)
            .field("kind", &self.kind_name())
            .field("potential", &self.potential)
            .finish()
    }
}

struct Program {
    /// outputs: g (n²), ∂g (n³), ∂∂̄g (n⁴), row-major in the index order
    /// of [`MetricJet`].
    jet: Tape,
    metric: Tape,
}

/// Wirtinger derivatives of a potential, cached by multi-index.
pub(crate) struct DerivCache {
    base: Expr,
    cache: HashMap<(Vec<usize>, Vec<usize>), Expr>,
}

impl DerivCache {
    pub(crate) fn new(base: Expr) -> Self {
        DerivCache { base, cache: HashMap::new() }
    }

    /// `∂^{hol} ∂̄^{anti} φ`; derivatives commute, so keys are sorted.
    pub(crate) fn get(&mut self, hol: &[usize], anti: &[usize]) -> Expr {
        let mut h = hol.to_vec();
        let mut a = anti.to_vec();
        h.sort_unstable();
        a.sort_unstable();
        if h.is_empty() && a.is_empty() {
            return self.base.clone();
        }
        if let Some(e) = self.cache.get(&(h.clone(), a.clone())) {
            return e.clone();
        }
        let e = if let Some(&last) = a.last() {
            let parent = self.get(&h, &a[..a.len() - 1]);
            parent.wirtinger(WirtingerVar::dzbar(last))
        } else {
            let last = *h.last().expect("nonempty");
            let parent = self.get(&h[..h.len() - 1], &a);
            parent.wirtinger(WirtingerVar::dz(last))
        };
        self.cache.insert((h, a), e.clone());
        e
    }
}

impl Program {
    fn compile(potential: &Expr, n: usize) -> Program {
        let mut d = DerivCache::new(potential.clone());
        let mut metric = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                metric.push(d.get(&[i], &[j]));
            }
        }
        let mut outs = metric.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    outs.push(d.get(&[k, i], &[j]));
                }
            }
        }
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        outs.push(d.get(&[k, i], &[l, j]));
                    }
                }
            }
        }
        Program { jet: Tape::new(&outs), metric: Tape::new(&metric) }
    }
}

/// Metric and its first two mixed derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub n: usize,
    /// `g_{ij̄}` at `(i, j)`.
    pub g: CMat,
    /// `g^{ij̄}` at `(i, j)`.
    pub ginv: CMat,
    /// `∂_k g_{ij̄}` at `[(k·n + i)·n + j]`.
    pub dg: Vec<C64>,
    /// `∂_k∂_l̄ g_{ij̄}` at `[((k·n + l)·n + i)·n + j]`.
    pub ddg: Vec<C64>,
}

impl MetricJet {
    pub fn d(&self, k: usize, i: usize, j: usize) -> C64 {
        self.dg[(k * self.n + i) * self.n + j]
    }

    /// `∂_k̄ g_{ij̄} = conj(∂_k g_{jī})`.
    pub fn dbar(&self, k: usize, i: usize, j: usize) -> C64 {
        self.d(k, j, i).conj()
    }

    pub fn dd(&self, k: usize, l: usize, i: usize, j: usize) -> C64 {
        self.ddg[((k * self.n + l) * self.n + i) * self.n + j]
    }

    pub fn metric(&self) -> Result<HermMetricAt> {
        HermMetricAt::new(self.g.clone())
    }

    /// `Γ^k_{ij}` at `[(k·n + i)·n + j]`.
    pub fn christoffel(&self) -> Christoffel {
        let n = self.n;
        let mut data = vec![C64::new(0.0, 0.0); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = C64::new(0.0, 0.0);
                    for l in 0..n {
                        s += self.ginv[(k, l)] * self.d(i, j, l);
                    }
                    data[(k * n + i) * n + j] = s;
                }
            }
        }
        Christoffel { n, data }
    }

    pub fn curvature(&self) -> CurvatureAt {
        let n = self.n;
        let mut data = vec![C64::new(0.0, 0.0); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = -self.dd(k, l, i, j);
                        for p in 0..n {
                            for q in 0..n {
                                s += self.ginv[(p, q)] * self.d(k, i, q) * self.dbar(l, p, j);
                            }
                        }
                        data[((i * n + j) * n + k) * n + l] = s;
                    }
                }
            }
        }
        CurvatureAt { point: self.point.clone(), n, data }
    }

    /// Largest violation of the jet invariants (Hermitian `g`, Kähler
    /// symmetry of `∂g`, Hermitian `∂∂̄g`).
    pub fn invariant_defect(&self) -> f64 {
        let n = self.n;
        let mut dev = linalg::hermitian_deviation(&self.g);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dev = dev.max((self.d(k, i, j) - self.d(i, k, j)).norm());
                    for l in 0..n {
                        dev = dev.max((self.dd(k, l, i, j) - self.dd(l, k, j, i).conj()).norm());
                    }
                }
            }
        }
        dev
    }
}

#[derive(Debug, Clone)]
pub struct Christoffel {
    pub n: usize,
    pub data: Vec<C64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> C64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// `R_{ij̄kl̄}` at a point.
#[derive(Debug, Clone)]
pub struct CurvatureAt {
    pub point: Vec<f64>,
    pub n: usize,
    pub data: Vec<C64>,
}

impl CurvatureAt {
    pub fn zeros(n: usize) -> Self {
        CurvatureAt { point: vec![0.0; 2 * n], n, data: vec![C64::new(0.0, 0.0); n.pow(4)] }
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: C64) {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l] = v;
    }

    /// `R(U, V̄, W, X̄) = R_{ij̄kl̄} Uⁱ V̄ʲ Wᵏ X̄ˡ`.
    pub fn eval(&self, u: &[C64], v: &[C64], w: &[C64], x: &[C64]) -> C64 {
        let n = self.n;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let a = u[i] * v[j].conj();
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..n {
                    let b = a * w[k];
                    for l in 0..n {
                        s += b * x[l].conj() * self.get(i, j, k, l);
                    }
                }
            }
        }
        s
    }

    /// `R(V, V̄, V, V̄)`, real for a Kähler tensor.
    pub fn quartic(&self, v: &[C64]) -> f64 {
        self.eval(v, v, v, v).re
    }

    /// `A(V)_{kl̄} = R(V, V̄, ∂_k, ∂̄_l)`.
    pub fn contract_pair(&self, v: &[C64]) -> CMat {
        let n = self.n;
        CMat::from_fn(n, n, |k, l| {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    s += self.get(i, j, k, l) * v[i] * v[j].conj();
                }
            }
            s
        })
    }

    /// Components in the frame whose vectors are the columns of `e`:
    /// `R'_{abcd} = R(e_a, ē_b, e_c, ē_d)`.
    pub fn in_frame(&self, e: &CMat) -> CurvatureAt {
        let n = self.n;
        let cols: Vec<Vec<C64>> = (0..n).map(|a| e.column(a).iter().copied().collect()).collect();
        let mut out = CurvatureAt { point: self.point.clone(), n, data: vec![C64::new(0.0, 0.0); n.pow(4)] };
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        out.set(a, b, c, d, self.eval(&cols[a], &cols[b], &cols[c], &cols[d]));
                    }
                }
            }
        }
        out
    }

    /// Largest violation of the Kähler symmetries, relative to
    /// `1 + max|R|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        dev = dev.max((r - self.get(k, j, i, l)).norm());
                        dev = dev.max((r - self.get(i, l, k, j)).norm());
                        dev = dev.max((r - self.get(j, i, l, k).conj()).norm());
                    }
                }
            }
        }
        dev / (1.0 + self.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// g-orthonormal frame `E = L^{-T}` (columns), `g = L L*`: `Eᵀ g Ē = I`.
pub fn orthonormal_frame(g: &CMat) -> Result<CMat> {
    let l = linalg::cholesky(g).ok_or_else(|| Error::NotPositiveDefinite { at: "frame".into() })?;
    Ok(linalg::inverse(&l)?.transpose())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

impl Model {
    fn build(n: usize, kind: ModelKind, potential: Expr) -> Model {
        let program = Arc::new(Program::compile(&potential, n));
        Model { n, kind, potential, program }
    }

    /// Flat-plus-periodic torus. `base` must be Hermitian positive
    /// definite and `g₀ + ∂∂̄ψ` positive definite everywhere; the latter is
    /// checked on a dense grid of the variables `ψ` depends on.
    pub fn torus(base: CMat, psi: Expr) -> Result<Model> {
        let n = base.nrows();
        if n == 0 || base.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: base.ncols() });
        }
        HermMetricAt::new(base.clone())?;
        if let Some(&v) = psi.free_vars().iter().next_back() {
            if v >= 2 * n {
                return Err(Error::DimensionMismatch { expected: 2 * n, found: v + 1 });
            }
        }
        check_periodic(&psi, n)?;
        let mut quad = Expr::zero();
        for i in 0..n {
            for j in 0..n {
                quad = quad + Expr::constant(base[(i, j)]) * Expr::z(i) * Expr::zbar(j);
            }
        }
        let m = Model::build(n, ModelKind::Torus { base, psi: psi.clone() }, quad + psi);
        m.scan_positive_definite()?;
        Ok(m)
    }

    pub fn flat_torus(n: usize) -> Model {
        Model::torus(linalg::identity(n), Expr::zero()).expect("identity metric")
    }

    pub fn fubini_study(n: usize, scale: f64) -> Result<Model> {
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::UnsupportedModel(format!("Fubini-Study scale {scale} must be positive")));
        }
        let phi = (Expr::one() + Expr::norm_sq(n)).ln().scale(C64::new(scale, 0.0));
        Ok(Model::build(n, ModelKind::FubiniStudy { scale }, phi))
    }

    pub fn product(a: Model, b: Model) -> Result<Model> {
        let n = a.n + b.n;
        let shift: Vec<Expr> = (0..2 * b.n).map(|v| Expr::var(v + 2 * a.n)).collect();
        let phi = a.potential.clone() + b.potential.substitute(&shift)?;
        Ok(Model::build(n, ModelKind::Product(Box::new(a), Box::new(b)), phi))
    }

    /// A local chart given only by its potential.
    pub fn chart(n: usize, potential: Expr) -> Result<Model> {
        if let Some(&v) = potential.free_vars().iter().next_back() {
            if v >= 2 * n {
                return Err(Error::DimensionMismatch { expected: 2 * n, found: v + 1 });
            }
        }
        Ok(Model::build(n, ModelKind::Chart, potential))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn kind_name(&self) -> String {
        match &self.kind {
            ModelKind::Torus { .. } => format!("torus({})", self.n),
            ModelKind::FubiniStudy { scale } => format!("fubini-study({}, c={scale})", self.n),
            ModelKind::Product(a, b) => format!("{} x {}", a.kind_name(), b.kind_name()),
            ModelKind::Chart => format!("chart({})", self.n),
        }
    }

    /// Stable content hash for report provenance.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(format!("{}|{}", self.kind_name(), self.potential).as_bytes())
    }

    /// True if the model is a torus or a product of tori.
    pub fn is_torus_type(&self) -> bool {
        match &self.kind {
            ModelKind::Torus { .. } => true,
            ModelKind::Product(a, b) => a.is_torus_type() && b.is_torus_type(),
            _ => false,
        }
    }

    /// Real variables the metric depends on; the others are directions
    /// of translation invariance.
    pub fn active_vars(&self) -> Vec<usize> {
        let mut vars: Vec<usize> = self.potential.free_vars().into_iter().collect();
        if self.is_torus_type() {
            // the quadratic base part contributes a constant metric
            vars = self.torus_psi_vars();
        }
        vars
    }

    fn torus_psi_vars(&self) -> Vec<usize> {
        match &self.kind {
            ModelKind::Torus { psi, .. } => psi.free_vars().into_iter().collect(),
            ModelKind::Product(a, b) => {
                let mut v = a.torus_psi_vars();
                v.extend(b.torus_psi_vars().into_iter().map(|x| x + 2 * a.n));
                v
            }
            _ => Vec::new(),
        }
    }

    /// Dimension of the flat-torus part of a product (factors with
    /// constant metric).
    pub fn flat_factor_dim(&self) -> usize {
        match &self.kind {
            ModelKind::Torus { psi, .. } if psi.is_constant() => self.n,
            ModelKind::Product(a, b) => a.flat_factor_dim() + b.flat_factor_dim(),
            _ => 0,
        }
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<CMat> {
        self.check_point(x)?;
        let vals = self.program.metric.eval(&pad(x, self.program.metric.arity()))?;
        Ok(CMat::from_row_slice(self.n, self.n, &vals))
    }

    pub fn metric(&self, x: &[f64]) -> Result<HermMetricAt> {
        HermMetricAt::new(self.metric_at(x)?).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { at: format_point(x) },
            other => other,
        })
    }

    pub fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.check_point(x)?;
        let n = self.n;
        let vals = self.program.jet.eval(&pad(x, self.program.jet.arity()))?;
        let g = CMat::from_row_slice(n, n, &vals[..n * n]);
        let metric = HermMetricAt::new(g.clone()).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { at: format_point(x) },
            other => other,
        })?;
        let dg = vals[n * n..n * n + n * n * n].to_vec();
        let ddg = vals[n * n + n * n * n..].to_vec();
        Ok(MetricJet { point: x.to_vec(), n, g, ginv: metric.inverse().clone(), dg, ddg })
    }

    pub fn curvature(&self, x: &[f64]) -> Result<CurvatureAt> {
        Ok(self.jet(x)?.curvature())
    }

    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        Ok(self.jet(x)?.christoffel())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, found: x.len() });
        }
        Ok(())
    }

    fn scan_positive_definite(&self) -> Result<()> {
        let active = self.active_vars();
        if active.is_empty() {
            return self.metric(&vec![0.0; 2 * self.n]).map(|_| ());
        }
        let d = active.len() as u32;
        let per_dim = ((4096f64).powf(1.0 / d as f64).floor() as usize).max(8);
        let total = per_dim.pow(d);
        let mut x = vec![0.0; 2 * self.n];
        for idx in 0..total {
            let mut rem = idx;
            for &v in &active {
                x[v] = (rem % per_dim) as f64 / per_dim as f64;
                rem /= per_dim;
            }
            self.metric(&x)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..10 * (d as usize) {
            for &v in &active {
                x[v] = rng.gen_range(0.0..1.0);
            }
            self.metric(&x)?;
        }
        Ok(())
    }
}

fn check_periodic(psi: &Expr, n: usize) -> Result<()> {
    if psi.is_constant() {
        return Ok(());
    }
    let tape = Tape::new(std::slice::from_ref(psi));
    let mut rng = ChaCha8Rng::seed_from_u64(0x7045);
    for _ in 0..8 {
        let x: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let base = tape.eval(&pad(&x, tape.arity()))?[0];
        for v in 0..2 * n {
            let mut y = x.clone();
            y[v] += 1.0;
            let shifted = tape.eval(&pad(&y, tape.arity()))?[0];
            if (shifted - base).norm() > 1e-9 * (1.0 + base.norm()) {
                return Err(Error::UnsupportedModel(format!(
                    "torus potential is not periodic in {}",
                    if v % 2 == 0 { format!("x{}", v / 2 + 1) } else { format!("y{}", v / 2 + 1) }
                )));
            }
        }
    }
    Ok(())
}

fn pad(x: &[f64], len: usize) -> Vec<f64> {
    let mut v = x.to_vec();
    if v.len() < len {
        v.resize(len, 0.0);
    }
    v
}

pub(crate) fn format_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("node ({})", parts.join(", "))
}
