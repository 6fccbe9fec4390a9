#ifndef KPPFRONT_H
#define KPPFRONT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum KppStatus {
  KPP_STATUS_OK = 0,
  KPP_STATUS_NULL_POINTER = 1,
  KPP_STATUS_INVALID_UTF8 = 2,
  KPP_STATUS_CONFIG = 3,
  KPP_STATUS_INVALID_MEDIUM = 4,
  KPP_STATUS_INVALID_PARAMETER = 5,
  KPP_STATUS_NUMERICAL = 6,
  KPP_STATUS_IO = 7,
  KPP_STATUS_OUT_OF_RANGE = 8,
  KPP_STATUS_PANIC = 9,
} KppStatus;

/**
 * A medium: diffusion, drift and reaction coefficients.
 */
typedef struct KppMedium KppMedium;

/**
 * Hamiltonian table sampled on a momentum grid.
 */
typedef struct KppTable KppTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *kpp_version(void);

/**
 * Message of the last failure on this thread; empty after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *kpp_last_error(void);

/**
 * Build a medium from its JSON description (the `medium` section of a run config).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_medium` must be writable.
 */
enum KppStatus kpp_medium_from_json(const char *json, struct KppMedium **out_medium);

/**
 * Constant coefficients `a0 > 0`, `q0`, `c0 > 0`.
 *
 * # Safety
 * `out_medium` must be writable.
 */
enum KppStatus kpp_medium_homogeneous(double a0,
                                      double q0,
                                      double c0,
                                      struct KppMedium **out_medium);

/**
 * # Safety
 * `medium` must come from this library and not be freed twice; null is ignored.
 */
void kpp_medium_free(struct KppMedium *medium);

/**
 * Diffusion, drift and linear growth rate at `x`.
 *
 * # Safety
 * Pointers must be valid; outputs must be writable.
 */
enum KppStatus kpp_medium_coefficients(const struct KppMedium *medium,
                                       double x,
                                       double *a,
                                       double *q,
                                       double *c);

/**
 * Lower and upper Hamiltonian at momentum `p` with the engine described by
 * `engine_json` (e.g. `{"kind": "periodic"}`) and default windows.
 *
 * # Safety
 * Pointers must be valid; outputs must be writable.
 */
enum KppStatus kpp_hamiltonian(const struct KppMedium *medium,
                               const char *engine_json,
                               double p,
                               double *h_under,
                               double *h_over);

/**
 * Hamiltonian table on `p_min, p_min + p_step, ..., p_max`, refined near the speed minimizers.
 *
 * # Safety
 * Pointers must be valid; `out_table` must be writable.
 */
enum KppStatus kpp_table_compute(const struct KppMedium *medium,
                                 const char *engine_json,
                                 double p_min,
                                 double p_max,
                                 double p_step,
                                 struct KppTable **out_table);

/**
 * Number of rows; 0 for a null table.
 *
 * # Safety
 * `table` must be null or valid.
 */
size_t kpp_table_len(const struct KppTable *table);

/**
 * # Safety
 * Pointers must be valid; outputs must be writable.
 */
enum KppStatus kpp_table_row(const struct KppTable *table,
                             size_t index,
                             double *p,
                             double *h_under,
                             double *h_over);

/**
 * Lower and upper spreading speeds `min_{p>0} H(-p)/p` from the table.
 *
 * # Safety
 * Pointers must be valid; outputs must be writable.
 */
enum KppStatus kpp_table_speed(const struct KppTable *table, double *w_under, double *w_over);

/**
 * # Safety
 * `table` must come from this library and not be freed twice; null is ignored.
 */
void kpp_table_free(struct KppTable *table);

/**
 * Simulate from the default datum up to `t_final` and measure the empirical
 * speeds over `[t_final / 2, t_final]`. A speed that is not attained is NaN.
 *
 * # Safety
 * Pointers must be valid; outputs must be writable.
 */
enum KppStatus kpp_empirical_speed(const struct KppMedium *medium,
                                   double t_final,
                                   double dx,
                                   double dt,
                                   double *w_star,
                                   double *w_upper);

/**
 * Run the full pipeline for a JSON run config, writing outputs under `out_dir`.
 * `exit_code` receives the command-line exit status: 0 pass, 1 verdict
 * failure, 2 config error, 3 numerical failure. The status is `Ok` whenever
 * the pipeline ran, including verdict failures.
 *
 * # Safety
 * Strings must be NUL-terminated; `exit_code` must be writable.
 */
enum KppStatus kpp_run_config(const char *config_json, const char *out_dir, int *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KPPFRONT_H */
