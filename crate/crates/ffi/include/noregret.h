#ifndef NOREGRET_H
#define NOREGRET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NrStatus {
  NR_STATUS_OK = 0,
  NR_STATUS_NULL_POINTER = 1,
  NR_STATUS_INVALID_INPUT = 2,
  NR_STATUS_DIMENSION = 3,
  NR_STATUS_NON_FINITE = 4,
  NR_STATUS_QUERY_INFEASIBLE = 5,
  NR_STATUS_NUMERICAL = 6,
  NR_STATUS_CONFIG = 7,
  NR_STATUS_IO = 8,
  NR_STATUS_BUFFER_TOO_SMALL = 9,
  NR_STATUS_PANIC = 10,
} NrStatus;

typedef enum NrTargetKind {
  /**
   * Distance `|s - value|`.
   */
  NR_TARGET_KIND_POINT = 0,
  /**
   * Distance to `[0, value]`.
   */
  NR_TARGET_KIND_INTERVAL = 1,
} NrTargetKind;

typedef enum NrScenario {
  NR_SCENARIO_TRUE_MODEL = 0,
  NR_SCENARIO_ZERO_MODEL = 1,
  NR_SCENARIO_GP_ADAPTIVE = 2,
} NrScenario;

typedef struct NrFeasibleSet NrFeasibleSet;

typedef struct NrPendulumRun NrPendulumRun;

typedef struct NrRegressionRun NrRegressionRun;

typedef struct NrTrace NrTrace;

/**
 * Result of [`nr_classical_tail_check`]; index fields are meaningful only when the flag is set.
 */
typedef struct NrTailCheck {
  bool converged;
  size_t converged_from;
  bool has_exceedance;
  size_t last_exceedance;
} NrTailCheck;

/**
 * Partial sum plus certified tail of `sum_i ||M^i||`.
 */
typedef struct NrSigmaSum {
  double value;
  double partial;
  double tail_bound;
  size_t terms;
} NrSigmaSum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message (NUL-terminated, truncated to `capacity`) and returns its full length.
 *
 * # Safety
 * `buf` must be valid for `capacity` bytes, or null with `capacity == 0`.
 */
size_t nr_last_error_message(char *buf,
                             size_t capacity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nr_version(void);

/**
 * # Safety
 * `lower` and `upper` must point to `dim` doubles; `out` must be writable.
 */
enum NrStatus nr_set_new_box(const double *lower,
                             const double *upper,
                             size_t dim,
                             struct NrFeasibleSet **out);

/**
 * # Safety
 * `center` must point to `dim` doubles; `out` must be writable.
 */
enum NrStatus nr_set_new_ball(const double *center,
                              size_t dim,
                              double radius,
                              struct NrFeasibleSet **out);

/**
 * # Safety
 * `set` must come from `nr_set_new_*` and not be used afterwards.
 */
void nr_set_free(struct NrFeasibleSet *set);

/**
 * Dimension of the set, 0 for a null handle.
 *
 * # Safety
 * `set` must be a live handle or null.
 */
size_t nr_set_dimension(const struct NrFeasibleSet *set);

/**
 * Euclidean projection of `point` into `result` (both of length `dim`).
 *
 * # Safety
 * `point` and `result` must be valid for `dim` doubles.
 */
enum NrStatus nr_set_project(const struct NrFeasibleSet *set,
                             const double *point,
                             size_t dim,
                             double *result);

/**
 * # Safety
 * `point` must be valid for `dim` doubles; `inside` must be writable.
 */
enum NrStatus nr_set_contains(const struct NrFeasibleSet *set,
                              const double *point,
                              size_t dim,
                              double tol,
                              bool *inside);

/**
 * # Safety
 * `values` must point to `len` doubles; `out` must be writable.
 */
enum NrStatus nr_trace_new(const double *values, size_t len, struct NrTrace **out);

/**
 * The doubling-gap sequence: 1 at powers of two, `1/t^2` elsewhere.
 *
 * # Safety
 * `out` must be writable.
 */
enum NrStatus nr_trace_power_spikes(size_t len, struct NrTrace **out);

/**
 * # Safety
 * `trace` must come from `nr_trace_*` and not be used afterwards.
 */
void nr_trace_free(struct NrTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle or null.
 */
size_t nr_trace_len(const struct NrTrace *trace);

/**
 * Smallest `n >= start` with the next `duration` samples within `epsilon` of the target.
 * `found` is false when the trace holds no such window.
 *
 * # Safety
 * `found` and `index` must be writable.
 */
enum NrStatus nr_ip_witness(const struct NrTrace *trace,
                            double epsilon,
                            size_t duration,
                            size_t start,
                            enum NrTargetKind target_kind,
                            double target_value,
                            bool *found,
                            size_t *index);

/**
 * # Safety
 * `result` must be writable.
 */
enum NrStatus nr_classical_tail_check(const struct NrTrace *trace,
                                      double target,
                                      double epsilon,
                                      struct NrTailCheck *result);

/**
 * Running means into `result`, which must hold at least `nr_trace_len` doubles.
 *
 * # Safety
 * `result` must be valid for `capacity` doubles.
 */
enum NrStatus nr_cesaro_averages(const struct NrTrace *trace, double *result, size_t capacity);

/**
 * Spectral radius of the row-major `n x n` matrix.
 *
 * # Safety
 * `data` must point to `n * n` doubles; `radius` must be writable.
 */
enum NrStatus nr_spectral_radius(const double *data, size_t n, double *radius);

/**
 * # Safety
 * `data` must point to `n * n` doubles; `result` must be writable.
 */
enum NrStatus nr_sigma_sum(const double *data,
                           size_t n,
                           double tail_tol,
                           struct NrSigmaSum *result);

/**
 * Runs online regression. `config_json` is a JSON regression config; null means the reference experiment.
 *
 * # Safety
 * `config_json` must be null or a NUL-terminated string; `out` must be writable.
 */
enum NrStatus nr_regression_run(const char *config_json,
                                uint64_t seed,
                                struct NrRegressionRun **out);

/**
 * # Safety
 * `run` must come from `nr_regression_run` and not be used afterwards.
 */
void nr_regression_free(struct NrRegressionRun *run);

/**
 * Number of stages, 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t nr_regression_len(const struct NrRegressionRun *run);

/**
 * Number of learned weights, 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t nr_regression_weight_count(const struct NrRegressionRun *run);

/**
 * # Safety
 * `result` must be valid for `capacity` doubles.
 */
enum NrStatus nr_regression_losses(const struct NrRegressionRun *run,
                                   double *result,
                                   size_t capacity);

/**
 * # Safety
 * `result` must be valid for `capacity` doubles.
 */
enum NrStatus nr_regression_final_weights(const struct NrRegressionRun *run,
                                          double *result,
                                          size_t capacity);

/**
 * `max(0, R(T)) / T` against the best fixed action over the first `horizon` stages.
 *
 * # Safety
 * `result` must be writable.
 */
enum NrStatus nr_regression_average_regret(const struct NrRegressionRun *run,
                                           size_t horizon,
                                           double *result);

/**
 * Runs the pendulum loop for one scenario. `config_json` holds optional
 * `params`, `mixture` and `controller` objects; null means the reference setup.
 *
 * # Safety
 * `config_json` must be null or a NUL-terminated string; `out` must be writable.
 */
enum NrStatus nr_pendulum_run(const char *config_json,
                              enum NrScenario scenario,
                              struct NrPendulumRun **out);

/**
 * # Safety
 * `run` must come from `nr_pendulum_run` and not be used afterwards.
 */
void nr_pendulum_free(struct NrPendulumRun *run);

/**
 * # Safety
 * `run` must be a live handle or null.
 */
size_t nr_pendulum_len(const struct NrPendulumRun *run);

/**
 * `||e_t||` per step.
 *
 * # Safety
 * `result` must be valid for `capacity` doubles.
 */
enum NrStatus nr_pendulum_error_norms(const struct NrPendulumRun *run,
                                      double *result,
                                      size_t capacity);

/**
 * `||xi - x_t||` per step.
 *
 * # Safety
 * `result` must be valid for `capacity` doubles.
 */
enum NrStatus nr_pendulum_tracking(const struct NrPendulumRun *run,
                                   double *result,
                                   size_t capacity);

/**
 * Mean `||e_t||` over the last quarter of the run.
 *
 * # Safety
 * `result` must be writable.
 */
enum NrStatus nr_pendulum_last_quarter_mean_error(const struct NrPendulumRun *run, double *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOREGRET_H */
