#ifndef MACROLAB_H
#define MACROLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MlStatus {
  ML_STATUS_OK = 0,
  ML_STATUS_NULL_POINTER = 1,
  ML_STATUS_INVALID_ARGUMENT = 2,
  ML_STATUS_PARSE = 3,
  ML_STATUS_VALIDATION = 4,
  ML_STATUS_IO = 5,
  ML_STATUS_BUFFER_TOO_SMALL = 6,
  ML_STATUS_TOTAL_LOSS = 7,
  ML_STATUS_INTERNAL = 8,
} MlStatus;

/**
 * Opaque panel handle.
 */
typedef struct MlPanel MlPanel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *ml_status_string(enum MlStatus status);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `cap` bytes. Returns the full length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t ml_last_error_message(char *buf, size_t cap);

/**
 * Loads a panel-CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MlStatus ml_panel_load_csv(const char *path, struct MlPanel **out);

/**
 * Simulates the default rank-based panel with `n` stocks over `years`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MlStatus ml_panel_simulate_default(size_t n,
                                        size_t years,
                                        uint64_t seed,
                                        struct MlPanel **out);

/**
 * Releases a panel; null is ignored.
 *
 * # Safety
 * `panel` must come from this library and not be used afterwards.
 */
void ml_panel_free(struct MlPanel *panel);

/**
 * Number of trading days; 0 for null.
 *
 * # Safety
 * `panel` must be null or a live handle.
 */
size_t ml_panel_num_days(const struct MlPanel *panel);

/**
 * Number of distinct stocks; 0 for null.
 *
 * # Safety
 * `panel` must be null or a live handle.
 */
size_t ml_panel_num_stocks(const struct MlPanel *panel);

/**
 * Shannon entropy of the top-`k` cap weights on day `t`.
 *
 * # Safety
 * `panel` must be a live handle and `out` a valid pointer.
 */
enum MlStatus ml_entropy_topk(const struct MlPanel *panel, size_t t, size_t k, double *out);

/**
 * `(sum w^p)^(1/p)`.
 *
 * # Safety
 * `weights` must point to `n` values and `out` be valid.
 */
enum MlStatus ml_diversity_p(const double *weights, size_t n, double p, double *out);

/**
 * Excess growth rate of weights `w` over log returns `r`.
 *
 * # Safety
 * `w` and `r` must point to `n` values and `out` be valid.
 */
enum MlStatus ml_excess_growth_rate(const double *w, const double *r, size_t n, double *out);

/**
 * Cumulative cap-weighted excess growth of the top-`k` market on the grid
 * `0, dt, 2 dt, ...`; one value per grid point, starting with 0.
 *
 * # Safety
 * `panel` must be a live handle, `buf` null or `cap` writable values, `len`
 * valid.
 */
enum MlStatus ml_cumulative_egr(const struct MlPanel *panel,
                                size_t k,
                                size_t dt,
                                double *buf,
                                size_t cap,
                                size_t *len);

/**
 * Wealth path of one diversity-weighted run over `[start, end]` starting at
 * 1000. `f = 0` never rebalances. Costs are proportional at rate `cost`.
 *
 * # Safety
 * `panel` must be a live handle, `buf` null or `cap` writable values, `len`
 * valid.
 */
enum MlStatus ml_backtest_run(const struct MlPanel *panel,
                              double p,
                              size_t f,
                              size_t k,
                              double cost,
                              size_t start,
                              size_t end,
                              double *buf,
                              size_t cap,
                              size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MACROLAB_H */
