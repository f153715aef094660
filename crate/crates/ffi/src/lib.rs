//! C ABI over `kahler-core`.
//!
//! Objects are opaque heap handles released with the matching `_free`
//! function. Every fallible call returns a [`KahlerStatus`]; on failure the
//! message is kept per thread and can be copied out with
//! [`kahler_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kahler_core::analysis::{hsc, kappa, KappaOptions};
use kahler_core::expr::parse;
use kahler_core::forms::PForm;
use kahler_core::geometry::Model;
use kahler_core::linalg;
use kahler_core::verifier::{calibrate, identity_e1, Conventions};
use kahler_core::Error;
use num_complex::Complex64 as C64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KahlerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    NotPositiveDefinite = 4,
    Unsupported = 5,
    HypothesisViolated = 6,
    Calibration = 7,
    Panic = 8,
    Internal = 9,
}

/// A Kähler model manifold.
pub struct KahlerModel {
    inner: Model,
}

/// A holomorphic `(p,0)`-form with constant coefficients.
pub struct KahlerForm {
    inner: PForm,
}

/// The three integrated identity terms and their relative residual.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KahlerIdentityResult {
    pub lhs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(KahlerStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) => KahlerStatus::Parse,
            Error::NotPositiveDefinite { .. } => KahlerStatus::NotPositiveDefinite,
            Error::UnsupportedModel(_) => KahlerStatus::Unsupported,
            Error::HypothesisViolated(_) => KahlerStatus::HypothesisViolated,
            Error::Calibration(_) => KahlerStatus::Calibration,
            Error::Io(_) => KahlerStatus::Internal,
            _ => KahlerStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(KahlerStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(KahlerStatus::NullPointer, format!("`{what}` is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KahlerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            KahlerStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            KahlerStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn model_ref<'a>(m: *const KahlerModel) -> Result<&'a Model, Failure> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn point<'a>(m: &Model, x: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len != 2 * m.dim() {
        return Err(invalid(format!("point has {len} coordinates, model needs {}", 2 * m.dim())));
    }
    slice(x, len, "x")
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kahler_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `cap − 1` bytes). Returns the full message length, so a
/// zero-capacity call sizes the buffer.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn kahler_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Flat torus `Cⁿ/(Zⁿ + iZⁿ)` perturbed by the periodic potential `psi`
/// (an expression in `x1, y1, …`); pass null for the flat metric.
///
/// # Safety
/// `psi` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_torus(dim: usize, psi: *const c_char, out: *mut *mut KahlerModel) -> KahlerStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let model = if psi.is_null() {
            Model::flat_torus(dim)
        } else {
            let text = CStr::from_ptr(psi).to_str().map_err(|_| invalid("potential is not UTF-8"))?;
            let psi = parse(text, dim).map_err(Error::from)?;
            Model::torus(linalg::identity(dim), psi)?
        };
        emit(out, KahlerModel { inner: model })
    })
}

/// Fubini–Study metric `scale · ln(1 + |z|²)` on the affine chart of `CPⁿ`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_fubini_study(dim: usize, scale: f64, out: *mut *mut KahlerModel) -> KahlerStatus {
    guard(|| emit(out, KahlerModel { inner: Model::fubini_study(dim, scale)? }))
}

/// Riemannian product of two models; the inputs stay owned by the caller.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_product(
    a: *const KahlerModel,
    b: *const KahlerModel,
    out: *mut *mut KahlerModel,
) -> KahlerStatus {
    guard(|| {
        let m = Model::product(model_ref(a)?.clone(), model_ref(b)?.clone())?;
        emit(out, KahlerModel { inner: m })
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_free(m: *mut KahlerModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Complex dimension, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_dim(m: *const KahlerModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.dim())
}

/// `g_{ij̄}` at `x` (real coordinates `x1, y1, x2, y2, …`), row-major into
/// `re` and `im`, each of length `n²`.
///
/// # Safety
/// `x` must hold `x_len` doubles; `re` and `im` must hold `n²` doubles.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_metric(
    m: *const KahlerModel,
    x: *const f64,
    x_len: usize,
    re: *mut f64,
    im: *mut f64,
) -> KahlerStatus {
    guard(|| {
        let m = model_ref(m)?;
        let g = m.metric_at(point(m, x, x_len)?)?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                *re.add(i * n + j) = g[(i, j)].re;
                *im.add(i * n + j) = g[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Holomorphic sectional curvature `H(v)` at `x`.
///
/// # Safety
/// `x` must hold `x_len` doubles, `v_re`/`v_im` `v_len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_hsc(
    m: *const KahlerModel,
    x: *const f64,
    x_len: usize,
    v_re: *const f64,
    v_im: *const f64,
    v_len: usize,
    out: *mut f64,
) -> KahlerStatus {
    guard(|| {
        let m = model_ref(m)?;
        let x = point(m, x, x_len)?;
        let (re, im) = (slice(v_re, v_len, "v_re")?, slice(v_im, v_len, "v_im")?);
        let v: Vec<C64> = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
        let jet = m.jet(x)?;
        write(out, hsc(&jet.curvature(), &jet.g, &v)?)
    })
}

/// `κ = min H` over the unit sphere at `x`, with default search settings.
///
/// # Safety
/// `x` must hold `x_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kahler_model_kappa(
    m: *const KahlerModel,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
) -> KahlerStatus {
    guard(|| {
        let m = model_ref(m)?;
        let jet = m.jet(point(m, x, x_len)?)?;
        write(out, kappa(&jet.curvature(), &jet.g, KappaOptions::default())?.value)
    })
}

/// Constant `(p,0)`-form `Σ_t c_t dz^{I_t}` on `Cⁿ`. `indices` holds
/// `n_terms × degree` zero-based coordinate indices, one multi-index per
/// term; `re`/`im` hold the `n_terms` coefficients.
///
/// # Safety
/// Array arguments must be valid for the stated lengths; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kahler_form_constant(
    dim: usize,
    degree: usize,
    indices: *const usize,
    re: *const f64,
    im: *const f64,
    n_terms: usize,
    out: *mut *mut KahlerForm,
) -> KahlerStatus {
    guard(|| {
        let idx = slice(indices, n_terms * degree, "indices")?;
        let (re, im) = (slice(re, n_terms, "re")?, slice(im, n_terms, "im")?);
        let terms: Vec<(Vec<usize>, C64)> = (0..n_terms)
            .map(|t| (idx[t * degree..(t + 1) * degree].to_vec(), C64::new(re[t], im[t])))
            .collect();
        emit(out, KahlerForm { inner: PForm::constant(dim, degree, &terms)? })
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kahler_form_free(f: *mut KahlerForm) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Integrated identity on a torus model with `grid` nodes per direction,
/// standard conventions.
///
/// # Safety
/// `m` and `f` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kahler_identity_check(
    m: *const KahlerModel,
    f: *const KahlerForm,
    grid: usize,
    out: *mut KahlerIdentityResult,
) -> KahlerStatus {
    guard(|| {
        let m = model_ref(m)?;
        let f = &f.as_ref().ok_or_else(|| null("form"))?.inner;
        if grid == 0 {
            return Err(invalid("grid must be positive"));
        }
        let r = identity_e1(m, f, grid, &Conventions::default())?;
        write(out, KahlerIdentityResult { lhs: r.lhs, rhs1: r.rhs1, rhs2: r.rhs2, residual: r.residual })
    })
}

/// Select the gradient-norm constant on the built-in fixture.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kahler_calibrate(grid: usize, tolerance: f64, out: *mut f64) -> KahlerStatus {
    guard(|| write(out, calibrate(grid, tolerance)?.grad_constant))
}
