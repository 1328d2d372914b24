#ifndef WAVELAB_H
#define WAVELAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WlStatus {
  WL_STATUS_OK = 0,
  WL_STATUS_NULL_POINTER = 1,
  WL_STATUS_INVALID_ARGUMENT = 2,
  WL_STATUS_PARSE = 3,
  WL_STATUS_SIGNATURE = 4,
  WL_STATUS_SINGULAR_DENOMINATOR = 5,
  WL_STATUS_TERM_OVERFLOW = 6,
  WL_STATUS_CFL = 7,
  WL_STATUS_BLOW_UP = 8,
  WL_STATUS_FIT = 9,
  WL_STATUS_CONFIG = 10,
  WL_STATUS_IO = 11,
  WL_STATUS_BUFFER_TOO_SMALL = 12,
  WL_STATUS_PANIC = 13,
} WlStatus;

/**
 * Opaque metric handle.
 */
typedef struct WlMetric WlMetric;

/**
 * Opaque covector quadruple handle.
 */
typedef struct WlQuadruple WlQuadruple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf`.
 *
 * # Safety
 * `buf` must hold `cap` bytes or be null; `needed` must be null or valid.
 */
enum WlStatus wl_last_error(char *buf, size_t cap, size_t *needed);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum WlStatus wl_metric_minkowski(struct WlMetric **out);

/**
 * `e^{2 gamma} eta` with `gamma` an expression in `t, x1, x2, x3`.
 *
 * # Safety
 * `gamma` must be a NUL-terminated string; `out` valid for writes.
 */
enum WlStatus wl_metric_conformal(const char *gamma, struct WlMetric **out);

/**
 * `-beta dt^2 + k11 dx1^2 + k22 dx2^2 + k33 dx3^2`.
 *
 * # Safety
 * All strings NUL-terminated; `out` valid for writes.
 */
enum WlStatus wl_metric_product_diagonal(const char *beta,
                                         const char *k11,
                                         const char *k22,
                                         const char *k33,
                                         struct WlMetric **out);

/**
 * # Safety
 * `m` must come from a `wl_metric_*` constructor or be null.
 */
void wl_metric_free(struct WlMetric *m);

/**
 * Row-major `g_ij(x)` into `out[16]`.
 *
 * # Safety
 * `x` holds 4 values, `out` 16.
 */
enum WlStatus wl_metric_g(const struct WlMetric *m, const double *x, double *out);

/**
 * Scalar curvature at `x` in the library's sign convention.
 *
 * # Safety
 * `x` holds 4 values; `out` valid for writes.
 */
enum WlStatus wl_metric_scalar_curvature(const struct WlMetric *m, const double *x, double *out);

/**
 * `g^{ij} xi_i xi_j` at `x`.
 *
 * # Safety
 * `x` and `xi` hold 4 values; `out` valid for writes.
 */
enum WlStatus wl_metric_dual_norm_sq(const struct WlMetric *m,
                                     const double *x,
                                     const double *xi,
                                     double *out);

/**
 * Integrates the null bicharacteristic flow from `(x, xi)` to `s_max` with
 * step `ds`. Writes the end point to `x_out[4]`, `xi_out[4]`, the reached
 * parameter to `s_out` and the largest relative constraint defect to
 * `defect_out`. A ray that stops early is not an error; compare `s_out`.
 *
 * # Safety
 * Input arrays hold 4 values; output pointers valid for writes.
 */
enum WlStatus wl_hamilton_flow(const struct WlMetric *m,
                               const double *x,
                               const double *xi,
                               double s_max,
                               double ds,
                               double *x_out,
                               double *xi_out,
                               double *s_out,
                               double *defect_out);

/**
 * The one-parameter quadruple family at `rho`.
 *
 * # Safety
 * `out` valid for writes.
 */
enum WlStatus wl_quadruple_rho(double rho, struct WlQuadruple **out);

/**
 * Four Minkowski covectors, row-major `xis[16]`, at the origin.
 *
 * # Safety
 * `xis` holds 16 values; `out` valid for writes.
 */
enum WlStatus wl_quadruple_new(const double *xis, struct WlQuadruple **out);

/**
 * # Safety
 * `q` must come from a `wl_quadruple_*` constructor or be null.
 */
void wl_quadruple_free(struct WlQuadruple *q);

/**
 * `|sum_i c_i zeta_i|^2` for coefficients `c[4]`.
 *
 * # Safety
 * `c` holds 4 values; `out` valid for writes.
 */
enum WlStatus wl_quadruple_norm_sq(const struct WlQuadruple *q, const double *c, double *out);

/**
 * Closed-form four-wave coefficient. `case` is `'a'`, `'b'` or `'c'`;
 * `a`, `b`, `c` are the quadratic, cubic and quartic Taylor coefficients.
 *
 * # Safety
 * `out` valid for writes.
 */
enum WlStatus wl_p_case(char case_,
                        const struct WlQuadruple *q,
                        double a,
                        double b,
                        double c,
                        double *out);

/**
 * Interaction terms of multi-degree `multi[4]` for the Taylor orders in
 * `orders[n_orders]`, one s-expression per line.
 *
 * # Safety
 * `orders` holds `n_orders` values, `multi` 4; see the module notes for
 * `buf`, `cap`, `needed`.
 */
enum WlStatus wl_expansion_terms(const size_t *orders,
                                 size_t n_orders,
                                 const size_t *multi,
                                 char *buf,
                                 size_t cap,
                                 size_t *needed);

/**
 * Runs an experiment from config text and writes its JSON report into
 * `buf`. `pass` receives 1 when every check passed; that a check failed
 * is reported there, not through the status.
 *
 * # Safety
 * `config` NUL-terminated; see the module notes for `buf`, `cap`, `needed`.
 */
enum WlStatus wl_run_experiment(const char *config,
                                char *buf,
                                size_t cap,
                                size_t *needed,
                                int32_t *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVELAB_H */
