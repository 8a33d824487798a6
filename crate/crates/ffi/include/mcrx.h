#ifndef MCRX_H
#define MCRX_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum McrxStatus {
  MCRX_STATUS_OK = 0,
  MCRX_STATUS_NULL_POINTER = 1,
  MCRX_STATUS_INVALID_UTF8 = 2,
  MCRX_STATUS_PARSE = 3,
  MCRX_STATUS_INVALID_PARAM = 4,
  MCRX_STATUS_DOMAIN = 5,
  MCRX_STATUS_INFEASIBLE = 6,
  MCRX_STATUS_EMPTY_INTERVAL = 7,
  MCRX_STATUS_NUMERICAL = 8,
  MCRX_STATUS_CHAIN_TOO_LARGE = 9,
  MCRX_STATUS_SIMULATION = 10,
  MCRX_STATUS_BUFFER_SIZE = 11,
  MCRX_STATUS_PANIC = 12,
} McrxStatus;

/**
 * Opaque birth-death chain.
 */
typedef struct McrxChain McrxChain;

/**
 * Opaque system configuration.
 */
typedef struct McrxParams McrxParams;

/**
 * Opaque simulation result.
 */
typedef struct McrxSimResult McrxSimResult;

/**
 * Opaque stationary distribution.
 */
typedef struct McrxSteadyState McrxSteadyState;

typedef struct McrxRates {
  double lambda;
  double mu;
  double gamma;
  double gamma_prime;
  double gamma_a;
  double gamma_b;
  uint64_t capacity;
} McrxRates;

/**
 * Lower-bound fields are NaN when `feasible` is false.
 */
typedef struct McrxDoseBounds {
  double q_min_rate;
  double q_max_rate;
  double q_min;
  double q_max;
  double f_star;
  bool feasible;
} McrxDoseBounds;

typedef struct McrxSteadyMetrics {
  double blocking;
  double unbind_throughput;
  double reject_throughput;
  double rejection_fraction;
} McrxSteadyMetrics;

typedef struct McrxEventCounts {
  uint64_t arrivals;
  uint64_t blocked;
  uint64_t unbinds;
  uint64_t rejects;
} McrxEventCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *mcrx_last_error(void);

/**
 * The reference operating point. Never NULL.
 */
struct McrxParams *mcrx_params_reference(void);

/**
 * Parses a JSON config into `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum McrxStatus mcrx_params_from_json(const char *json, struct McrxParams **out);

/**
 * # Safety
 * `p` must come from this library and not be freed twice. NULL is ignored.
 */
void mcrx_params_free(struct McrxParams *p);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_params_capacity(const struct McrxParams *p, uint64_t *out);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_rates(const struct McrxParams *p, struct McrxRates *out);

/**
 * Rejection rate for `(lambda, mu)`; never fails.
 */
double mcrx_rejection_rate(double lambda, double mu);

/**
 * # Safety
 * `out` must be writable.
 */
enum McrxStatus mcrx_gamma_prime(double lambda, double mu, double *out);

/**
 * # Safety
 * `mu_i` and `gamma_i` must be writable.
 */
enum McrxStatus mcrx_state_rates(uint64_t i,
                                 uint64_t receptors,
                                 double mu,
                                 double gamma,
                                 double *mu_i,
                                 double *gamma_i);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_dose_bounds(const struct McrxParams *p, struct McrxDoseBounds *out);

/**
 * Builds the chain of `p`. A zero `capacity` or `receptors` keeps the
 * value derived from `p`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_chain_new(const struct McrxParams *p,
                               uint64_t capacity,
                               uint64_t receptors,
                               struct McrxChain **out);

/**
 * # Safety
 * `c` must come from this library and not be freed twice. NULL is ignored.
 */
void mcrx_chain_free(struct McrxChain *c);

/**
 * Number of states `N_m + 1`; 0 for NULL.
 *
 * # Safety
 * `c` must be a live handle or NULL.
 */
size_t mcrx_chain_state_count(const struct McrxChain *c);

/**
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_steady_state(const struct McrxChain *c, struct McrxSteadyState **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. NULL is ignored.
 */
void mcrx_steady_state_free(struct McrxSteadyState *s);

/**
 * Copies `P_0..P_{N_m}` into `buf`, which must hold exactly `len`
 * values where `len` is the chain's state count.
 *
 * # Safety
 * `s` must be a live handle and `buf` valid for `len` writes.
 */
enum McrxStatus mcrx_steady_state_probs(const struct McrxSteadyState *s, double *buf, size_t len);

/**
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_steady_state_metrics(const struct McrxSteadyState *s,
                                          struct McrxSteadyMetrics *out);

/**
 * Simulates `replications` independent runs of `events` events each,
 * with a 10% warmup.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_simulate(const struct McrxChain *c,
                              uint64_t events,
                              size_t replications,
                              uint64_t seed,
                              struct McrxSimResult **out);

/**
 * # Safety
 * `r` must come from this library and not be freed twice. NULL is ignored.
 */
void mcrx_sim_result_free(struct McrxSimResult *r);

/**
 * Copies the pooled occupancy into `buf` (exactly the chain's state count).
 *
 * # Safety
 * `r` must be a live handle and `buf` valid for `len` writes.
 */
enum McrxStatus mcrx_sim_result_occupancy(const struct McrxSimResult *r, double *buf, size_t len);

/**
 * Event counts summed over replications, from time 0.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum McrxStatus mcrx_sim_result_counts(const struct McrxSimResult *r, struct McrxEventCounts *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCRX_H */
