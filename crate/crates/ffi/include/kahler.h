#ifndef KAHLER_H
#define KAHLER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KahlerStatus {
  KAHLER_STATUS_OK = 0,
  KAHLER_STATUS_NULL_POINTER = 1,
  KAHLER_STATUS_INVALID_ARGUMENT = 2,
  KAHLER_STATUS_PARSE = 3,
  KAHLER_STATUS_NOT_POSITIVE_DEFINITE = 4,
  KAHLER_STATUS_UNSUPPORTED = 5,
  KAHLER_STATUS_HYPOTHESIS_VIOLATED = 6,
  KAHLER_STATUS_CALIBRATION = 7,
  KAHLER_STATUS_PANIC = 8,
  KAHLER_STATUS_INTERNAL = 9,
} KahlerStatus;

/**
 * A holomorphic `(p,0)`-form with constant coefficients.
 */
typedef struct KahlerForm KahlerForm;

/**
 * A Kähler model manifold.
 */
typedef struct KahlerModel KahlerModel;

/**
 * The three integrated identity terms and their relative residual.
 */
typedef struct KahlerIdentityResult {
  double lhs;
  double rhs1;
  double rhs2;
  double residual;
} KahlerIdentityResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *kahler_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `cap − 1` bytes). Returns the full message length, so a
 * zero-capacity call sizes the buffer.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t kahler_last_error(char *buf, size_t cap);

/**
 * Flat torus `Cⁿ/(Zⁿ + iZⁿ)` perturbed by the periodic potential `psi`
 * (an expression in `x1, y1, …`); pass null for the flat metric.
 *
 * # Safety
 * `psi` must be null or a NUL-terminated string; `out` must be writable.
 */
enum KahlerStatus kahler_model_torus(size_t dim, const char *psi, struct KahlerModel **out);

/**
 * Fubini–Study metric `scale · ln(1 + |z|²)` on the affine chart of `CPⁿ`.
 *
 * # Safety
 * `out` must be writable.
 */
enum KahlerStatus kahler_model_fubini_study(size_t dim, double scale, struct KahlerModel **out);

/**
 * Riemannian product of two models; the inputs stay owned by the caller.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum KahlerStatus kahler_model_product(const struct KahlerModel *a,
                                       const struct KahlerModel *b,
                                       struct KahlerModel **out);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void kahler_model_free(struct KahlerModel *m);

/**
 * Complex dimension, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t kahler_model_dim(const struct KahlerModel *m);

/**
 * `g_{ij̄}` at `x` (real coordinates `x1, y1, x2, y2, …`), row-major into
 * `re` and `im`, each of length `n²`.
 *
 * # Safety
 * `x` must hold `x_len` doubles; `re` and `im` must hold `n²` doubles.
 */
enum KahlerStatus kahler_model_metric(const struct KahlerModel *m,
                                      const double *x,
                                      size_t x_len,
                                      double *re,
                                      double *im);

/**
 * Holomorphic sectional curvature `H(v)` at `x`.
 *
 * # Safety
 * `x` must hold `x_len` doubles, `v_re`/`v_im` `v_len` doubles each.
 */
enum KahlerStatus kahler_model_hsc(const struct KahlerModel *m,
                                   const double *x,
                                   size_t x_len,
                                   const double *v_re,
                                   const double *v_im,
                                   size_t v_len,
                                   double *out);

/**
 * `κ = min H` over the unit sphere at `x`, with default search settings.
 *
 * # Safety
 * `x` must hold `x_len` doubles; `out` must be writable.
 */
enum KahlerStatus kahler_model_kappa(const struct KahlerModel *m,
                                     const double *x,
                                     size_t x_len,
                                     double *out);

/**
 * Constant `(p,0)`-form `Σ_t c_t dz^{I_t}` on `Cⁿ`. `indices` holds
 * `n_terms × degree` zero-based coordinate indices, one multi-index per
 * term; `re`/`im` hold the `n_terms` coefficients.
 *
 * # Safety
 * Array arguments must be valid for the stated lengths; `out` writable.
 */
enum KahlerStatus kahler_form_constant(size_t dim,
                                       size_t degree,
                                       const size_t *indices,
                                       const double *re,
                                       const double *im,
                                       size_t n_terms,
                                       struct KahlerForm **out);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void kahler_form_free(struct KahlerForm *f);

/**
 * Integrated identity on a torus model with `grid` nodes per direction,
 * standard conventions.
 *
 * # Safety
 * `m` and `f` must be live handles; `out` must be writable.
 */
enum KahlerStatus kahler_identity_check(const struct KahlerModel *m,
                                        const struct KahlerForm *f,
                                        size_t grid,
                                        struct KahlerIdentityResult *out);

/**
 * Select the gradient-norm constant on the built-in fixture.
 *
 * # Safety
 * `out` must be writable.
 */
enum KahlerStatus kahler_calibrate(size_t grid, double tolerance, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KAHLER_H */
