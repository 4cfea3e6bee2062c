#ifndef SGAT_H
#define SGAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Dimension of the cart-pole state `(x, ẋ, θ, θ̇)`.
 */
#define SGAT_CARTPOLE_STATE_DIM 4

/**
 * Result code of every fallible call.
 */
typedef enum SgatStatus {
  SGAT_STATUS_OK = 0,
  SGAT_STATUS_NULL_POINTER = 1,
  SGAT_STATUS_INVALID_ARGUMENT = 2,
  SGAT_STATUS_CONFIG = 3,
  SGAT_STATUS_NO_DATA = 4,
  SGAT_STATUS_NON_FINITE = 5,
  SGAT_STATUS_NOT_EPISODIC = 6,
  SGAT_STATUS_IO = 7,
  SGAT_STATUS_PANIC = 8,
  SGAT_STATUS_INTERNAL = 9,
} SgatStatus;

/**
 * Cart-pole plus its own random stream.
 */
typedef struct SgatCartPole SgatCartPole;

/**
 * Cliff Walking world plus its own random stream.
 */
typedef struct SgatCliff SgatCliff;

/**
 * Count-based forward model `P̂(s'|s,a)` over a finite MDP.
 */
typedef struct SgatTabularForward SgatTabularForward;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or `NULL` if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *sgat_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sgat_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be `NULL` or a pointer obtained from this library that has not
 * been freed yet.
 */
void sgat_string_free(char *s);

/**
 * Negative log-likelihood of `target` under a diagonal Gaussian with means
 * `mu` and log standard deviations `log_sigma`, each of length `dim`.
 *
 * # Safety
 * The three input arrays must hold `dim` values; `out` must be writable.
 */
enum SgatStatus sgat_gaussian_nll(const double *mu,
                                  const double *log_sigma,
                                  const double *target,
                                  size_t dim,
                                  double *out);

/**
 * Creates a 4x12 Cliff Walking world with the given slip probability.
 *
 * # Safety
 * `out` must be writable.
 */
enum SgatStatus sgat_cliff_new(double slip_prob, uint64_t seed, struct SgatCliff **out);

/**
 * # Safety
 * `handle` must be `NULL` or a live handle from [`sgat_cliff_new`].
 */
void sgat_cliff_free(struct SgatCliff *handle);

/**
 * Number of grid cells, i.e. states.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be writable.
 */
enum SgatStatus sgat_cliff_num_states(const struct SgatCliff *handle, size_t *out);

/**
 * Writes the start state.
 *
 * # Safety
 * `handle` must be a live handle; `state` must be writable.
 */
enum SgatStatus sgat_cliff_reset(struct SgatCliff *handle, size_t *state);

/**
 * One step. Actions: 0 up, 1 down, 2 left, 3 right.
 *
 * # Safety
 * `handle` must be a live handle; the three outputs must be writable.
 */
enum SgatStatus sgat_cliff_step(struct SgatCliff *handle,
                                size_t state,
                                size_t action,
                                size_t *next,
                                double *reward,
                                bool *terminal);

/**
 * Creates a cart-pole. `pole_mass_factor = 1` and `action_noise_std = 0`
 * give the nominal simulator.
 *
 * # Safety
 * `out` must be writable.
 */
enum SgatStatus sgat_cartpole_new(double pole_mass_factor,
                                  double action_noise_std,
                                  uint64_t seed,
                                  struct SgatCartPole **out);

/**
 * # Safety
 * `handle` must be `NULL` or a live handle from [`sgat_cartpole_new`].
 */
void sgat_cartpole_free(struct SgatCartPole *handle);

/**
 * Writes a random initial state into `state[0..4]`.
 *
 * # Safety
 * `handle` must be a live handle; `state` must hold 4 writable doubles.
 */
enum SgatStatus sgat_cartpole_reset(struct SgatCartPole *handle, double *state);

/**
 * One step with a force command in `[-1, 1]`.
 *
 * # Safety
 * `handle` must be a live handle; `state` must hold 4 doubles, `next` 4
 * writable doubles; `reward` and `terminal` must be writable.
 */
enum SgatStatus sgat_cartpole_step(struct SgatCartPole *handle,
                                   const double *state,
                                   double action,
                                   double *next,
                                   double *reward,
                                   bool *terminal);

/**
 * Fits a tabular forward model from `n` observed transitions given as three
 * parallel arrays.
 *
 * # Safety
 * `states`, `actions` and `next_states` must each hold `n` values; `out`
 * must be writable.
 */
enum SgatStatus sgat_tabular_forward_fit(size_t num_states,
                                         size_t num_actions,
                                         const size_t *states,
                                         const size_t *actions,
                                         const size_t *next_states,
                                         size_t n,
                                         struct SgatTabularForward **out);

/**
 * # Safety
 * `handle` must be `NULL` or a live handle from [`sgat_tabular_forward_fit`].
 */
void sgat_tabular_forward_free(struct SgatTabularForward *handle);

/**
 * Estimated `P̂(next | state, action)`; 0 for unseen pairs.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be writable.
 */
enum SgatStatus sgat_tabular_forward_probability(const struct SgatTabularForward *handle,
                                                 size_t state,
                                                 size_t action,
                                                 size_t next,
                                                 double *out);

/**
 * Most frequent next state (ties to the lowest index). Fails with
 * `NoData` when the pair was never observed.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be writable.
 */
enum SgatStatus sgat_tabular_forward_mode(const struct SgatTabularForward *handle,
                                          size_t state,
                                          size_t action,
                                          size_t *out);

/**
 * Runs an experiment from a TOML config and returns the result rows as CSV
 * in `*csv_out` (free with [`sgat_string_free`]). Nothing is written to disk.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated UTF-8 string; `csv_out` must be
 * writable.
 */
enum SgatStatus sgat_run_experiment(const char *config_toml, char **csv_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGAT_H */
