#ifndef COVARIANTS_H
#define COVARIANTS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CovStatus {
  COV_STATUS_OK = 0,
  COV_STATUS_NULL_POINTER = 1,
  COV_STATUS_INVALID_ARGUMENT = 2,
  COV_STATUS_UNSUPPORTED = 3,
  /**
   * The result does not fit the output type.
   */
  COV_STATUS_OVERFLOW = 4,
  /**
   * A caller buffer is too small; the needed size was written.
   */
  COV_STATUS_BUFFER_TOO_SMALL = 5,
  COV_STATUS_INTERNAL = 6,
} CovStatus;

/**
 * A parsed generator basis.
 */
typedef struct CovCatalog CovCatalog;

/**
 * Minimal solutions of a two-equation Diophantine system.
 */
typedef struct CovDioph CovDioph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *cov_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *cov_version(void);

/**
 * `dim Cov_{d,m}(S_n)`.
 *
 * # Safety
 * `result` must be valid for writes.
 */
enum CovStatus cov_springer_dim(size_t n, size_t d, size_t m, uint64_t *result);

/**
 * Dimension of the `(d, m)` component modulo a regular sequence of
 * invariants of the given degrees.
 *
 * # Safety
 * `degrees` must point to `len` values (or be null with `len == 0`);
 * `result` must be valid for writes.
 */
enum CovStatus cov_quotient_dim(size_t n,
                                size_t d,
                                size_t m,
                                const size_t *degrees,
                                size_t len,
                                int64_t *result);

/**
 * Maximal order of a generator of `Cov(S_n)`.
 *
 * # Safety
 * `result` must be valid for writes.
 */
enum CovStatus cov_lambda_bound(size_t n, size_t *result);

/**
 * Degree bound for generators of order `m` (n = 9 or 10).
 *
 * # Safety
 * `result` must be valid for writes.
 */
enum CovStatus cov_bound_max_degree(size_t n, size_t m, size_t *result);

/**
 * Load the shipped basis of `Cov(S_n)`.
 *
 * # Safety
 * `handle` must be valid for writes; release the result with
 * [`cov_catalog_free`].
 */
enum CovStatus cov_catalog_load(size_t n, struct CovCatalog **handle);

/**
 * # Safety
 * `handle` must come from [`cov_catalog_load`] and not be used afterwards.
 */
void cov_catalog_free(struct CovCatalog *handle);

/**
 * # Safety
 * `handle` must be live; `len` must be valid for writes.
 */
enum CovStatus cov_catalog_len(const struct CovCatalog *handle, size_t *len);

/**
 * Degree and order of entry `index`.
 *
 * # Safety
 * `handle` must be live; `degree` and `order` must be valid for writes.
 */
enum CovStatus cov_catalog_bidegree(const struct CovCatalog *handle,
                                    size_t index,
                                    size_t *degree,
                                    size_t *order);

/**
 * Copy the nul-terminated label of entry `index` into `buf`. `needed`
 * receives the size including the terminator, also on `BufferTooSmall`.
 *
 * # Safety
 * `handle` must be live; `buf` must hold `cap` bytes; `needed` must be
 * valid for writes.
 */
enum CovStatus cov_catalog_label(const struct CovCatalog *handle,
                                 size_t index,
                                 char *buf,
                                 size_t cap,
                                 size_t *needed);

/**
 * Evaluate entry `index` at the form with coefficients `coeffs` (`n + 1`
 * values, `x^n` first) over `F_p`. Writes the `order + 1` coefficients of
 * the covariant into `result`; `written` receives that count, also on
 * `BufferTooSmall`.
 *
 * # Safety
 * `handle` must be live; `coeffs` must hold `ncoeffs` values; `result`
 * must hold `cap` values; `written` must be valid for writes.
 */
enum CovStatus cov_catalog_evaluate(const struct CovCatalog *handle,
                                    size_t index,
                                    uint32_t p,
                                    const uint32_t *coeffs,
                                    size_t ncoeffs,
                                    uint32_t *result,
                                    size_t cap,
                                    size_t *written);

/**
 * Minimal solutions of `sum lhs1_i a_i = u + r`, `sum lhs2_j b_j = v + r`
 * through the injective companion.
 *
 * # Safety
 * `lhs1` and `lhs2` must hold `len1` and `len2` values; `handle` must be
 * valid for writes; release the result with [`cov_dioph_free`].
 */
enum CovStatus cov_dioph_solve(const uint64_t *lhs1,
                               size_t len1,
                               const uint64_t *lhs2,
                               size_t len2,
                               struct CovDioph **handle);

/**
 * # Safety
 * `handle` must come from [`cov_dioph_solve`] and not be used afterwards.
 */
void cov_dioph_free(struct CovDioph *handle);

/**
 * Number of minimal solutions of the companion system.
 *
 * # Safety
 * `handle` must be live; `count` must be valid for writes.
 */
enum CovStatus cov_dioph_count(const struct CovDioph *handle, size_t *count);

/**
 * Number of minimal solutions of the original system.
 *
 * # Safety
 * `handle` must be live; `count` must be valid for writes.
 */
enum CovStatus cov_dioph_expanded(const struct CovDioph *handle, uint64_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COVARIANTS_H */
