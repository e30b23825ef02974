#ifndef ROTLAYER_H
#define ROTLAYER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_UTF8 = 2,
  RL_STATUS_CONFIG = 3,
  RL_STATUS_INVALID_PARAM = 4,
  RL_STATUS_INVALID_REGIME = 5,
  RL_STATUS_NON_CONVERGENCE = 6,
  RL_STATUS_SINGULAR = 7,
  RL_STATUS_PRECONDITION = 8,
  RL_STATUS_SOLVER = 9,
  RL_STATUS_IO = 10,
  RL_STATUS_OUT_OF_RANGE = 11,
  RL_STATUS_PANIC = 12,
} RlStatus;

/**
 * Opaque run configuration.
 */
typedef struct RlConfig RlConfig;

/**
 * Opaque result of a pipeline run.
 */
typedef struct RlRun RlRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Owned by the
 * library; valid until the next failing call on the same thread.
 */
const char *rl_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void rl_string_free(char *s);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RlStatus rl_config_default(struct RlConfig **out);

/**
 * Parses a JSON configuration; missing keys take their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RlStatus rl_config_from_json(const char *json, struct RlConfig **out);

/**
 * Serializes a configuration to JSON.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_config_to_json(const struct RlConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must come from this library and not be freed twice.
 */
void rl_config_free(struct RlConfig *cfg);

/**
 * Runs the configured pipeline.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_run(const struct RlConfig *cfg, struct RlRun **out);

/**
 * # Safety
 * `run` must come from this library and not be freed twice.
 */
void rl_run_free(struct RlRun *run);

/**
 * Full report as JSON (17 significant digits).
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_run_report_json(const struct RlRun *run, char **out);

/**
 * Process-style exit code of the run: 0 pass, 2 gate failure, 3 nonconvergence.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_run_exit_code(const struct RlRun *run, int32_t *out);

/**
 * Limiting circulation of the run.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_run_tilde_omega(const struct RlRun *run, double *out);

/**
 * Number of output fields held by the run.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_run_field_count(const struct RlRun *run, size_t *out);

/**
 * Name of field `index` (free with [`rl_string_free`]).
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_run_field_name(const struct RlRun *run, size_t index, char **out);

/**
 * Radial node count of field `index`.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_run_field_len(const struct RlRun *run, size_t index, size_t *out);

/**
 * Samples field `index` at radial node `node` and angle `theta`, returning
 * the node coordinate and value.
 *
 * # Safety
 * `run` must be a live handle; `coord` and `value` valid pointers.
 */
enum RlStatus rl_run_field_eval(const struct RlRun *run,
                                size_t index,
                                size_t node,
                                double theta,
                                double *coord,
                                double *value);

/**
 * Writes `report.json`, `history.csv`, `timing.json` and `fields/*.csv` under `dir`.
 *
 * # Safety
 * `run` must be a live handle and `dir` a NUL-terminated path.
 */
enum RlStatus rl_run_write(const struct RlRun *run, const char *dir, bool with_fields);

/**
 * `ω̃` for boundary rotation `ω + δ f(θ)` with
 * `f = f_cos[0] + Σ_k (f_cos[k] cos kθ + f_sin[k] sin kθ)`; `f_sin[0]` must be 0.
 *
 * # Safety
 * Arrays must hold the given number of doubles; `out` must be valid.
 */
enum RlStatus rl_tilde_omega(double omega,
                             double delta,
                             const double *f_cos,
                             size_t n_cos,
                             const double *f_sin,
                             size_t n_sin,
                             double *out);

/**
 * One-dimensional Hardy check on samples starting at `s = 0`. With
 * `weighted` false the `s^{-2}` form is used and `alpha` ignored.
 *
 * # Safety
 * `s` and `f` must hold `n` doubles; `ratio` and `passed` must be valid.
 */
enum RlStatus rl_hardy_check(const double *s,
                             const double *f,
                             size_t n,
                             bool weighted,
                             double alpha,
                             double *ratio,
                             bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTLAYER_H */
