#ifndef PUCCI_H
#define PUCCI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  PUCCI_STATUS_OK = 0,
  PUCCI_STATUS_NULL_POINTER = 1,
  PUCCI_STATUS_INVALID_INPUT = 2,
  PUCCI_STATUS_PARAMETER = 3,
  PUCCI_STATUS_OUTSIDE = 4,
  PUCCI_STATUS_NUMERICAL = 5,
  PUCCI_STATUS_PANIC = 6,
} PucciStatus;

typedef enum {
  PUCCI_SUITE_RESIDUAL = 0,
  PUCCI_SUITE_C1 = 1,
  PUCCI_SUITE_BOUNDARY = 2,
  PUCCI_SUITE_SHEAR_BOUND = 3,
  PUCCI_SUITE_BLOCK = 4,
} PucciSuite;

/**
 * Opaque domain handle.
 */
typedef struct PucciDomain PucciDomain;

/**
 * Value, gradient and Hessian `[xx, yy, zz, xy, xz, yz]` at a point.
 */
typedef struct {
  double value;
  double gradient[3];
  double hessian[6];
  /**
   * Patch index in the order C, X, Y, Z, ZX, XY, YZ.
   */
  int32_t patch;
} PucciEval;

/**
 * Headline of a verification suite.
 */
typedef struct {
  bool pass;
  double statistic;
  double tolerance;
  double witness[3];
  bool has_witness;
} PucciSuiteResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pucci_version(void);

/**
 * Message of the last failed call on this thread (empty after success).
 * Valid until the next call into the library on the same thread.
 */
const char *pucci_last_error(void);

/**
 * Creates a domain for ellipticity `(lambda, big_lambda)` and shape `(gamma, a)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
PucciStatus pucci_domain_new(double lambda,
                             double big_lambda,
                             double gamma,
                             double a,
                             PucciDomain **out);

/**
 * Releases a domain. Null is ignored.
 *
 * # Safety
 * `d` must come from [`pucci_domain_new`] and not be used afterwards.
 */
void pucci_domain_free(PucciDomain *d);

/**
 * Membership of `p[3]` in the unsheared (`sheared == false`) or sheared domain.
 *
 * # Safety
 * `d` must be a live handle, `p` must point to 3 doubles, `out` valid for writes.
 */
PucciStatus pucci_domain_contains(const PucciDomain *d, const double *p, bool sheared, bool *out);

/**
 * Patch index of `p[3]` in the unsheared domain, or −1 when outside.
 *
 * # Safety
 * As for [`pucci_domain_contains`].
 */
PucciStatus pucci_domain_classify(const PucciDomain *d, const double *p, int32_t *out);

/**
 * Eigenfunction data at `p[3]` of the unsheared domain.
 *
 * # Safety
 * As for [`pucci_domain_contains`].
 */
PucciStatus pucci_eval(const PucciDomain *d, const double *p, PucciEval *out);

/**
 * Eigenfunction data of `u ∘ C_a⁻¹` at `x[3]` of the sheared domain.
 *
 * # Safety
 * As for [`pucci_domain_contains`].
 */
PucciStatus pucci_eval_sheared(const PucciDomain *d, const double *x, PucciEval *out);

/**
 * `M⁺(m)` for a symmetric matrix `m[6] = [xx, yy, zz, xy, xz, yz]`.
 *
 * # Safety
 * `m` must point to 6 doubles, `out` valid for writes.
 */
PucciStatus pucci_plus(const double *m, double lambda, double big_lambda, double *out);

/**
 * `M⁻(m)`, see [`pucci_plus`].
 *
 * # Safety
 * As for [`pucci_plus`].
 */
PucciStatus pucci_minus(const double *m, double lambda, double big_lambda, double *out);

/**
 * Ascending eigenvalues of `m[6]` into `out[3]`.
 *
 * # Safety
 * `m` must point to 6 doubles and `out` to 3 writable doubles.
 */
PucciStatus pucci_sym_eigenvalues(const double *m, double *out);

/**
 * Volume of the sheared domain by adaptive quadrature.
 *
 * # Safety
 * `d` must be a live handle; `volume` and `error` valid for writes.
 */
PucciStatus pucci_volume_quadrature(const PucciDomain *d, double *volume, double *error);

/**
 * Runs one verification suite (a `PucciSuite` value) with `n` samples and
 * reports its headline check. A suite that runs but fails still returns `Ok`
 * with `pass == false`.
 *
 * # Safety
 * `d` must be a live handle; `out` valid for writes.
 */
PucciStatus pucci_run_suite(const PucciDomain *d,
                            uint32_t suite,
                            size_t n,
                            uint64_t seed,
                            PucciSuiteResult *out);

/**
 * Lower bound `λπ²/(π² − a²)` for the principal half-eigenvalue of the sheared domain.
 *
 * # Safety
 * `d` must be a live handle; `out` valid for writes.
 */
PucciStatus pucci_shear_lower_bound(const PucciDomain *d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PUCCI_H */
