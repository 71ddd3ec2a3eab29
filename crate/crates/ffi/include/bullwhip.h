#ifndef BULLWHIP_H
#define BULLWHIP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BwStatus {
  BW_STATUS_OK = 0,
  BW_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The closed form does not cover the requested parameters (`n < M`).
   */
  BW_STATUS_NOT_SUPPORTED = 2,
  /**
   * Zero-variance input or output series.
   */
  BW_STATUS_DEGENERATE = 3,
  BW_STATUS_PARSE = 4,
  BW_STATUS_NULL_POINTER = 5,
  BW_STATUS_PANIC = 6,
} BwStatus;

/**
 * Opaque experiment: a resolved configuration plus, after
 * `bw_experiment_run`, one result per grid cell.
 */
typedef struct BwExperiment BwExperiment;

typedef struct BwKsResult {
  double statistic;
  double p_value;
} BwKsResult;

/**
 * Per-echelon statistics of one cell. Undefined ratios are NaN; a window
 * the forecasters lack is 0.
 */
typedef struct BwEchelonStats {
  uint32_t m;
  uint32_t n;
  double demand_mean;
  double demand_variance;
  double order_mean;
  double order_variance;
  double net_stock_variance;
  double bm;
  double bm_mean_scaled;
  double nsm;
  double amplification;
} BwEchelonStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bw_last_error_message(void);

/**
 * Deterministic lead time `lead`, lead-time-demand moving average of
 * window `n`.
 */
enum BwStatus bw_bm_deterministic_ma(uint32_t lead, uint32_t n, double *out);

/**
 * Stochastic lead times, moving average of lead-time demand over `n`
 * periods. Needs `n >= len`.
 *
 * # Safety
 * `probs` must point to `len` doubles.
 */
enum BwStatus bw_bm_ltd_ma(const double *probs,
                           size_t len,
                           uint32_t n,
                           double demand_mean,
                           double demand_variance,
                           double *out);

/**
 * AR(1) demand with coefficient `rho`, MMSE forecasts.
 *
 * # Safety
 * `probs` must point to `len` doubles.
 */
enum BwStatus bw_bm_ar1(const double *probs,
                        size_t len,
                        double rho,
                        double demand_mean,
                        double demand_variance,
                        double *out);

/**
 * ARMA(1,1) demand, MMSE forecasts.
 *
 * # Safety
 * `probs` must point to `len` doubles.
 */
enum BwStatus bw_bm_arma(const double *probs,
                         size_t len,
                         double rho,
                         double theta,
                         double demand_mean,
                         double demand_variance,
                         double *out);

/**
 * Lead times and demands forecast by moving averages of window `m` and
 * `n`, from lead-time moments.
 */
enum BwStatus bw_bm_mn(uint32_t m,
                       uint32_t n,
                       double lead_mean,
                       double lead_variance,
                       double demand_mean,
                       double demand_variance,
                       double *out);

/**
 * Two-sample Kolmogorov-Smirnov test with asymptotic p-value.
 *
 * # Safety
 * `a` and `b` must point to `na` and `nb` doubles.
 */
enum BwStatus bw_ks_two_sample(const double *a,
                               size_t na,
                               const double *b,
                               size_t nb,
                               struct BwKsResult *out);

/**
 * Parses and validates an experiment from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` receives a handle to
 * release with `bw_experiment_free`.
 */
enum BwStatus bw_experiment_from_toml(const char *toml, struct BwExperiment **out);

/**
 * Number of grid cells (1 without a grid).
 *
 * # Safety
 * `h` must come from `bw_experiment_from_toml`.
 */
enum BwStatus bw_experiment_cell_count(const struct BwExperiment *h, size_t *out);

/**
 * Number of ordering stages in the chain.
 *
 * # Safety
 * `h` must come from `bw_experiment_from_toml`.
 */
enum BwStatus bw_experiment_echelon_count(const struct BwExperiment *h, size_t *out);

/**
 * Simulates every cell with the configured replications. Running again
 * replaces the previous results with identical ones.
 *
 * # Safety
 * `h` must come from `bw_experiment_from_toml`.
 */
enum BwStatus bw_experiment_run(struct BwExperiment *h);

/**
 * Pooled statistics of `echelon` (0 = closest to the customer) in `cell`.
 *
 * # Safety
 * `h` must come from `bw_experiment_from_toml`.
 */
enum BwStatus bw_experiment_result(const struct BwExperiment *h,
                                   size_t cell,
                                   size_t echelon,
                                   struct BwEchelonStats *out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `h` must be null or come from `bw_experiment_from_toml`, and is invalid
 * afterwards.
 */
void bw_experiment_free(struct BwExperiment *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BULLWHIP_H */
