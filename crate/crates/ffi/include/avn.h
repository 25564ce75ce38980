/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef AVN_H
#define AVN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AvnStatus {
  AVN_STATUS_OK = 0,
  AVN_STATUS_NULL_POINTER = 1,
  AVN_STATUS_INVALID_UTF8 = 2,
  AVN_STATUS_INVALID_CONFIG = 3,
  AVN_STATUS_MODEL_ERROR = 4,
  AVN_STATUS_CERTIFICATE_FAILED = 5,
  AVN_STATUS_OUT_OF_RANGE = 6,
  AVN_STATUS_PANIC = 7,
} AvnStatus;

/**
 * Result of a prediction or a simulation.
 */
typedef struct AvnReport AvnReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Exact quantum predictions. `config_json` may be null for the defaults.
 *
 * # Safety
 * `config_json` is null or a NUL-terminated string; `out` is a valid pointer.
 */
enum AvnStatus avn_predict(const char *config_json, struct AvnReport **out);

/**
 * Seeded simulation. `config_json` may be null for the defaults.
 *
 * # Safety
 * `config_json` is null or a NUL-terminated string; `out` is a valid pointer.
 */
enum AvnStatus avn_simulate(const char *config_json, struct AvnReport **out);

/**
 * # Safety
 * `report` is null or a handle from this library not yet freed.
 */
void avn_report_free(struct AvnReport *report);

/**
 * Bell-operator value, NaN for a null handle.
 *
 * # Safety
 * `report` is null or a live handle.
 */
double avn_report_bell_value(const struct AvnReport *report);

/**
 * # Safety
 * `report` is null or a live handle.
 */
double avn_report_bell_stderr(const struct AvnReport *report);

/**
 * # Safety
 * `report` is null or a live handle.
 */
double avn_report_m_fidelity(const struct AvnReport *report);

/**
 * Correlation `index` (0 = ZZ … 8 = M). Any of the output pointers may be null.
 *
 * # Safety
 * `report` is a live handle; non-null outputs are valid for writes.
 */
enum AvnStatus avn_report_correlation(const struct AvnReport *report,
                                      size_t index,
                                      double *value,
                                      double *std_error,
                                      uint64_t *n);

/**
 * Full report document as JSON; release with [`avn_string_free`].
 *
 * # Safety
 * `report` is a live handle; `out` is a valid pointer.
 */
enum AvnStatus avn_report_json(const struct AvnReport *report, char **out);

/**
 * Local-realism certificate as JSON. The document is written even when a
 * check fails, in which case the status is `CertificateFailed`.
 *
 * # Safety
 * `out` is a valid pointer.
 */
enum AvnStatus avn_lhv_certificate_json(char **out);

/**
 * # Safety
 * `s` is null or a string returned by this library not yet freed.
 */
void avn_string_free(char *s);

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *avn_last_error(void);

/**
 * Library version, static storage.
 */
const char *avn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AVN_H */
