#ifndef SEQLOF_H
#define SEQLOF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every exported function.
 */
typedef enum SeqlofStatus {
  SeqlofStatus_Ok = 0,
  SeqlofStatus_NullPointer = 1,
  SeqlofStatus_Domain = 2,
  SeqlofStatus_SingularDesign = 3,
  SeqlofStatus_LengthMismatch = 4,
  SeqlofStatus_EmptyInput = 5,
  SeqlofStatus_Overrun = 6,
  SeqlofStatus_Quadrature = 7,
  SeqlofStatus_InfeasiblePlacement = 8,
  SeqlofStatus_Config = 9,
  SeqlofStatus_Panic = 99,
} SeqlofStatus;

typedef enum SeqlofDominance {
  SeqlofDominance_Dominates = 0,
  SeqlofDominance_Dominated = 1,
  SeqlofDominance_Incomparable = 2,
} SeqlofDominance;

/**
 * Streaming lack-of-fit monitor for a polynomial model.
 */
typedef struct SeqlofMonitor SeqlofMonitor;

/**
 * Outcome of a completed test.
 */
typedef struct SeqlofOutcome {
  bool reject;
  /**
   * 1-based index of the first residual below the boundary, 0 if none.
   */
  size_t first_crossing_index;
  double min_statistic;
} SeqlofOutcome;

/**
 * Per-observation report from [`seqlof_monitor_push`].
 */
typedef struct SeqlofStep {
  /**
   * False while the initial fit is still being collected.
   */
  bool has_residual;
  /**
   * 1-based residual index, 0 during warm-up.
   */
  size_t index;
  double residual;
  double statistic;
  bool crossed;
} SeqlofStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never null.
 */
const char *seqlof_status_message(enum SeqlofStatus status);

/**
 * Rejection boundary `Phi^{-1}(alpha / 2)`.
 *
 * # Safety
 * `result` must be a valid pointer to a writable double.
 */
enum SeqlofStatus seqlof_threshold(double alpha, double *result);

/**
 * Limiting drift of the residual path for a jump from `c0` to `c1` at `q`.
 *
 * # Safety
 * `result` must be a valid pointer to a writable double.
 */
enum SeqlofStatus seqlof_trend_step(double q, double c0, double c1, double z, double *result);

/**
 * Recursive residuals of a polynomial fit of the given degree.
 *
 * Writes `n - degree - 1` values to `residuals` and stores the count in
 * `written`.
 *
 * # Safety
 * `points` and `responses` must point to `n` readable doubles and
 * `residuals` to `residuals_len` writable doubles.
 */
enum SeqlofStatus seqlof_recursive_residuals(const double *points,
                                             const double *responses,
                                             size_t n,
                                             size_t degree,
                                             double *residuals,
                                             size_t residuals_len,
                                             size_t *written);

/**
 * Runs the test on a full vector of `n_total - d` residuals.
 *
 * # Safety
 * `residuals` must point to `len` readable doubles, `outcome` must be writable.
 */
enum SeqlofStatus seqlof_run_test(const double *residuals,
                                  size_t len,
                                  double alpha,
                                  size_t n_total,
                                  size_t d,
                                  struct SeqlofOutcome *outcome);

/**
 * Compares the asymptotic q-designs `q1` and `q2` on the default grid.
 *
 * # Safety
 * `verdict` must be writable.
 */
enum SeqlofStatus seqlof_dominance_compare(double q1, double q2, enum SeqlofDominance *verdict);

/**
 * Minimiser of `q ln q` on (0, 1] and the minimum value.
 *
 * # Safety
 * Both pointers must be writable.
 */
enum SeqlofStatus seqlof_minimize_q_log_q(double *q_star, double *value);

/**
 * Creates a monitor for `n_total` observations and a polynomial of `degree`.
 *
 * # Safety
 * `handle` must be writable. The returned handle must be released with
 * [`seqlof_monitor_free`].
 */
enum SeqlofStatus seqlof_monitor_new(double alpha,
                                     size_t n_total,
                                     size_t degree,
                                     struct SeqlofMonitor **handle);

/**
 * Feeds one observation.
 *
 * # Safety
 * `monitor` must come from [`seqlof_monitor_new`] and `step` must be writable.
 */
enum SeqlofStatus seqlof_monitor_push(struct SeqlofMonitor *monitor,
                                      double t,
                                      double y,
                                      struct SeqlofStep *step);

/**
 * Current state of a monitor as a test outcome.
 *
 * # Safety
 * `monitor` must come from [`seqlof_monitor_new`] and `outcome` must be writable.
 */
enum SeqlofStatus seqlof_monitor_outcome(const struct SeqlofMonitor *monitor,
                                         struct SeqlofOutcome *outcome);

/**
 * Releases a monitor. Null is ignored.
 *
 * # Safety
 * `monitor` must be null or come from [`seqlof_monitor_new`], and must not be
 * used afterwards.
 */
void seqlof_monitor_free(struct SeqlofMonitor *monitor);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQLOF_H */
