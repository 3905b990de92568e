#ifndef CDASIM_H
#define CDASIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values 1 to 3 match the command-line
 * exit codes.
 */
typedef enum {
  CDA_STATUS_OK = 0,
  CDA_STATUS_CONFIG_ERROR = 1,
  CDA_STATUS_RUNTIME_ERROR = 2,
  CDA_STATUS_IO_ERROR = 3,
  CDA_STATUS_NULL_POINTER = 4,
  CDA_STATUS_OUT_OF_RANGE = 5,
  CDA_STATUS_BUFFER_TOO_SMALL = 6,
  CDA_STATUS_PANIC = 7,
} CdaStatus;

typedef enum {
  CDA_MODEL_ZI = 0,
  CDA_MODEL_ZIP = 1,
  CDA_MODEL_GD = 2,
} CdaModel;

/**
 * Market configuration handle.
 */
typedef struct CdaConfig CdaConfig;

/**
 * Finished simulation handle.
 */
typedef struct CdaLog CdaLog;

/**
 * One executed trade.
 */
typedef struct {
  uint64_t step;
  uint64_t day;
  uint64_t buyer_id;
  uint64_t seller_id;
  double bid;
  double ask;
  double price;
} CdaTrade;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cda_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library on this thread.
 */
const char *cda_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void cda_string_free(char *s);

/**
 * Creates a configuration holding the default market.
 *
 * # Safety
 * `out` must be valid for writes.
 */
CdaStatus cda_config_default(CdaConfig **out);

/**
 * Parses a JSON configuration; omitted fields take their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
CdaStatus cda_config_from_json(const char *json, CdaConfig **out);

/**
 * Serializes the configuration with every field expanded. Free the result
 * with [`cda_string_free`].
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
CdaStatus cda_config_to_json(const CdaConfig *config, char **out);

/**
 * # Safety
 * `config` must be a live handle.
 */
CdaStatus cda_config_set_model(CdaConfig *config, CdaModel model);

/**
 * # Safety
 * `config` must be a live handle.
 */
CdaStatus cda_config_set_seed(CdaConfig *config, uint64_t seed);

/**
 * Sets the trader count, rounds per day and number of days.
 *
 * # Safety
 * `config` must be a live handle.
 */
CdaStatus cda_config_set_size(CdaConfig *config,
                              uint64_t n_traders,
                              uint64_t rounds_per_day,
                              uint64_t n_days);

/**
 * # Safety
 * `config` must be a live handle.
 */
CdaStatus cda_config_set_gd_forced_trade(CdaConfig *config, bool forced);

/**
 * # Safety
 * `config` must be NULL or a live handle; it is invalid afterwards.
 */
void cda_config_free(CdaConfig *config);

/**
 * Runs one market.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
CdaStatus cda_simulate(const CdaConfig *config, CdaLog **out);

/**
 * Loads a run directory written by [`cda_log_write_dir`].
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` valid for writes.
 */
CdaStatus cda_log_read_dir(const char *dir, CdaLog **out);

/**
 * Writes `config.json`, `trades.csv`, `market.csv` and, if requested,
 * `shouts.csv` into `dir`.
 *
 * # Safety
 * `log` must be a live handle and `dir` a NUL-terminated string.
 */
CdaStatus cda_log_write_dir(const CdaLog *log, const char *dir, bool with_shouts);

/**
 * Number of trades, or 0 for NULL.
 *
 * # Safety
 * `log` must be NULL or a live handle.
 */
size_t cda_log_trade_count(const CdaLog *log);

/**
 * Equilibrium price of the market, or NaN for NULL.
 *
 * # Safety
 * `log` must be NULL or a live handle.
 */
double cda_log_equilibrium_price(const CdaLog *log);

/**
 * Copies trade `index` into `out`.
 *
 * # Safety
 * `log` must be a live handle and `out` valid for writes.
 */
CdaStatus cda_log_trade(const CdaLog *log, size_t index, CdaTrade *out);

/**
 * Writes `(trader_id, degree)` pairs of the transaction network into
 * `ids` and `degrees`. `len` receives the node count; if it exceeds
 * `capacity` nothing is copied and `BufferTooSmall` is returned, so a call
 * with capacity 0 queries the size.
 *
 * # Safety
 * `log` must be a live handle, `len` valid for writes and, when
 * `capacity > 0`, `ids` and `degrees` valid for `capacity` writes.
 */
CdaStatus cda_log_degrees(const CdaLog *log,
                          uint64_t *ids,
                          uint64_t *degrees,
                          size_t capacity,
                          size_t *len);

/**
 * Anti-community detection on the transaction network. Community ids are
 * written per node in the order of [`cda_log_degrees`]; sizing works the
 * same way. `modularity_out` may be NULL.
 *
 * # Safety
 * Same contract as [`cda_log_degrees`] for `assignment`; `modularity_out`
 * must be NULL or valid for writes.
 */
CdaStatus cda_log_anticommunities(const CdaLog *log,
                                  uint64_t *assignment,
                                  size_t capacity,
                                  size_t *len,
                                  double *modularity_out);

/**
 * Runs an experiment from a preset name or a JSON spec (exactly one must
 * be non-NULL) and writes its artifacts under `out_dir`, or under the
 * spec's own directory when `out_dir` is NULL.
 *
 * # Safety
 * Non-NULL string arguments must be NUL-terminated.
 */
CdaStatus cda_experiment_run(const char *preset_name,
                             const char *spec_json,
                             const char *out_dir,
                             size_t threads);

/**
 * # Safety
 * `log` must be NULL or a live handle; it is invalid afterwards.
 */
void cda_log_free(CdaLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDASIM_H */
