/* C ABI for the doa direction-of-arrival estimation toolkit. */

#ifndef DOA_H
#define DOA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result status of every FFI call.
typedef enum DoaStatus {
  DOA_STATUS_OK = 0,
  DOA_STATUS_NULL_ARGUMENT = 1,
  DOA_STATUS_UTF8_ERROR = 2,
  DOA_STATUS_CONFIG_ERROR = 3,
  DOA_STATUS_INVALID_INPUT = 4,
  DOA_STATUS_SINGULAR_MATRIX = 5,
  DOA_STATUS_DEGENERATE_INPUT = 6,
  DOA_STATUS_ILL_CONDITIONED_MANIFOLD = 7,
  DOA_STATUS_ESTIMATION_FAILED = 8,
  DOA_STATUS_BUFFER_TOO_SMALL = 9,
  DOA_STATUS_INTERNAL_PANIC = 10,
} DoaStatus;

// Opaque scenario handle.
typedef struct DoaScenario DoaScenario;

// Opaque snapshot-matrix handle. Carries the source count of the scenario
// that produced it (0 when constructed from raw data), which estimators use
// as the default `k_sources`.
typedef struct DoaSnapshots DoaSnapshots;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message of the current thread; valid until the next failing
// call on this thread. Never null.
const char *doa_last_error_message(void);

// Library version as a static string.
const char *doa_version(void);

// Parse a scenario from the JSON config used by the CLI
// (`{"geometry": {...}, "sources": {...}, "snr_db": ..., "n_snapshots": ...,
// "seed": ...}`). Returns null on error and sets `status`.
//
// # Safety
// `json` must be a valid NUL-terminated string; `status` may be null.
struct DoaScenario *doa_scenario_from_json(const char *json, enum DoaStatus *status);

// Free a scenario handle; accepts null.
//
// # Safety
// `scenario` must come from [`doa_scenario_from_json`] and not be freed
// twice.
void doa_scenario_free(struct DoaScenario *scenario);

// Simulate the scenario's snapshot matrix. Returns null on error.
//
// # Safety
// `scenario` must be a valid handle; `status` may be null.
struct DoaSnapshots *doa_scenario_simulate(const struct DoaScenario *scenario,
                                           enum DoaStatus *status);

// Wrap caller-provided data as a snapshot matrix. `data` holds `m*n`
// row-major complex entries as interleaved (re, im) doubles; `spacing` is
// the element spacing in wavelengths.
//
// # Safety
// `data` must point to `2*m*n` doubles; `status` may be null.
struct DoaSnapshots *doa_snapshots_from_data(size_t m,
                                             size_t n,
                                             double spacing,
                                             const double *data,
                                             enum DoaStatus *status);

// Free a snapshot handle; accepts null.
//
// # Safety
// `snapshots` must come from this library and not be freed twice.
void doa_snapshots_free(struct DoaSnapshots *snapshots);

// Dimensions of a snapshot matrix.
//
// # Safety
// All pointers must be valid or null (null `snapshots` is an error).
enum DoaStatus doa_snapshots_dims(const struct DoaSnapshots *snapshots,
                                  size_t *m_out,
                                  size_t *n_out);

// Copy the snapshot matrix out as row-major interleaved (re, im) doubles.
// `cap` is the capacity of `out` in doubles and must be at least `2*m*n`.
//
// # Safety
// `out` must point to at least `cap` writable doubles.
enum DoaStatus doa_snapshots_copy_data(const struct DoaSnapshots *snapshots,
                                       double *out,
                                       size_t cap);

// Run an estimator and copy the sorted angles (degrees) into `out_angles`.
// `params_json` is an optional `method_params` object (`k_sources`, `tol`,
// …); pass null for defaults. `out_len` receives the number of angles
// produced, which may be smaller than the requested source count when the
// method could not resolve every source.
//
// # Safety
// `out_angles` must point to at least `cap` writable doubles; `out_len`
// must be valid.
enum DoaStatus doa_estimate(const struct DoaSnapshots *snapshots,
                            const char *method,
                            const char *params_json,
                            double *out_angles,
                            size_t cap,
                            size_t *out_len);

// Run an estimator and return the full result as a JSON string
// (`{"method": ..., "angles_deg": [...], "diagnostics": {...}}`), exactly
// the CLI's stdout format. Free the string with [`doa_string_free`].
// Returns null on error.
//
// # Safety
// Pointer arguments as in [`doa_estimate`]; `status` may be null.
char *doa_estimate_json(const struct DoaSnapshots *snapshots,
                        const char *method,
                        const char *params_json,
                        enum DoaStatus *status);

// Free a string returned by this library; accepts null.
//
// # Safety
// `s` must come from [`doa_estimate_json`] and not be freed twice.
void doa_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOA_H */
