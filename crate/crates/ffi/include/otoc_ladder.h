/* C interface for the two-leg OTOC protocol simulator. */

#ifndef OTOC_LADDER_H
#define OTOC_LADDER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Column selectors for `otoc_series_column`.
 */
typedef enum OtocColumn {
  OtocColumn_Times = 0,
  OtocColumn_OG = 1,
  OtocColumn_NG = 2,
  OtocColumn_OCorr = 3,
  OtocColumn_OTh = 4,
  OtocColumn_OTfd = 5,
  OtocColumn_OGNorm = 6,
  OtocColumn_OThNorm = 7,
  OtocColumn_SigmaCorr = 8,
} OtocColumn;

/**
 * Status codes returned by every API function.
 */
typedef enum OtocStatus {
  OtocStatus_Ok = 0,
  /**
   * Null pointer or malformed argument at the FFI boundary.
   */
  OtocStatus_InvalidArgument = 1,
  /**
   * The spec failed validation.
   */
  OtocStatus_Validation = 2,
  /**
   * A numerical stage failed (convergence, guard violation, ...).
   */
  OtocStatus_Compute = 3,
} OtocStatus;

/**
 * Opaque result handle holding one completed run.
 */
typedef struct OtocSeries OtocSeries;

/**
 * Opaque experiment description handle.
 */
typedef struct OtocSpec OtocSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *otoc_version(void);

/**
 * Description of the most recent error on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *otoc_last_error_message(void);

/**
 * Parses a flat key=value config into a new spec handle. Pass an empty
 * string for the default spec.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be a valid pointer.
 */
enum OtocStatus otoc_spec_parse(const char *text, struct OtocSpec **out);

/**
 * Applies one key=value assignment to an existing spec.
 *
 * # Safety
 * All pointers must be valid; strings must be NUL-terminated.
 */
enum OtocStatus otoc_spec_set(struct OtocSpec *spec, const char *key, const char *value);

/**
 * Releases a spec handle. Null is a no-op.
 *
 * # Safety
 * `spec` must come from `otoc_spec_parse` and not be freed twice.
 */
void otoc_spec_free(struct OtocSpec *spec);

/**
 * Executes the full pipeline for a spec, producing a series handle.
 *
 * # Safety
 * `spec` must be a live spec handle; `out` must be valid.
 */
enum OtocStatus otoc_run(const struct OtocSpec *spec, struct OtocSeries **out);

/**
 * Number of time points in a result series.
 *
 * # Safety
 * `series` must be a live series handle; `out` must be valid.
 */
enum OtocStatus otoc_series_len(const struct OtocSeries *series, uintptr_t *out);

/**
 * Copies one column into `buffer` (capacity `len`, must equal
 * `otoc_series_len`). Undefined entries are NaN.
 *
 * # Safety
 * `buffer` must point to at least `len` doubles.
 */
enum OtocStatus otoc_series_column(const struct OtocSeries *series,
                                   enum OtocColumn column,
                                   double *buffer,
                                   uintptr_t len);

/**
 * Extracted half-height slope κ, or NaN when the series never crosses 0.5.
 *
 * # Safety
 * `series` and `out` must be valid.
 */
enum OtocStatus otoc_series_kappa(const struct OtocSeries *series, double *out);

/**
 * Renders the result as CSV; the returned string must be released with
 * `otoc_string_free`.
 *
 * # Safety
 * `series` and `out` must be valid.
 */
enum OtocStatus otoc_series_csv(const struct OtocSeries *series, char **out);

/**
 * Releases a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void otoc_string_free(char *s);

/**
 * Releases a series handle. Null is a no-op.
 *
 * # Safety
 * `series` must come from `otoc_run` and not be freed twice.
 */
void otoc_series_free(struct OtocSeries *series);

/**
 * Fidelity-optimal inverse temperature for one (n, λ): writes β₀, the
 * effective temperature T₀ = 1/β₀, and the optimal fidelity F.
 *
 * # Safety
 * The out-pointers must be valid.
 */
enum OtocStatus otoc_fidelity(uintptr_t n, double lambda, double *beta0, double *t0, double *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OTOC_LADDER_H */
