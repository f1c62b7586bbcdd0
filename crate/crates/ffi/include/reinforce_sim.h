#ifndef REINFORCE_SIM_H
#define REINFORCE_SIM_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RsStatus {
  RS_STATUS_OK = 0,
  RS_STATUS_NULL_POINTER = 1,
  RS_STATUS_INVALID_PARAMETER = 2,
  RS_STATUS_SUB_UNIT_WEIGHT = 3,
  RS_STATUS_NEGATIVE_MASS = 4,
  RS_STATUS_DECOUPLED = 5,
  RS_STATUS_HORIZON_TOO_LARGE = 6,
  RS_STATUS_SANDWICH_VIOLATION = 7,
  RS_STATUS_QUADRATURE = 8,
  RS_STATUS_MISMATCH = 9,
  RS_STATUS_INSUFFICIENT = 10,
  RS_STATUS_PANIC = 11,
} RsStatus;

typedef enum RsClassification {
  RS_CLASSIFICATION_TRANSIENT_RIGHT = 0,
  RS_CLASSIFICATION_TRANSIENT_LEFT = 1,
  RS_CLASSIFICATION_RECURRENT = 2,
} RsClassification;

/**
 * Direct weight dynamics of `n` particles.
 */
typedef struct RsDirect RsDirect;

/**
 * Seeded random stream.
 */
typedef struct RsStream RsStream;

/**
 * Criteria for i.i.d. Beta(alpha1, alpha2) right-jump probabilities.
 */
typedef struct RsCriterion {
  /**
   * E[log(p/(1-p))].
   */
  double log_odds_mean;
  /**
   * E[log((1-p)/p)].
   */
  double mu;
  /**
   * E[(1-p)/p]; only meaningful when `mean_inverse_odds_finite`.
   */
  double mean_inverse_odds;
  bool mean_inverse_odds_finite;
  enum RsClassification classification;
  bool finite_mean_return;
} RsCriterion;

typedef struct RsCouplingSummary {
  uint64_t violations;
  /**
   * -1 when l = r was not reached within the budget.
   */
  int64_t tau1_event;
  int64_t max_rp_minus_lp;
  uint64_t events_run;
} RsCouplingSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length, 0 if none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t rs_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rs_version(void);

/**
 * # Safety
 * `out_handle` must be valid for writes.
 */
enum RsStatus rs_stream_new(uint64_t seed, uint64_t stream_id, struct RsStream **out_handle);

/**
 * Uniform draw in [0, 1).
 *
 * # Safety
 * `stream` must be a live handle; `out_value` valid for writes.
 */
enum RsStatus rs_stream_uniform(struct RsStream *stream, double *out_value);

/**
 * # Safety
 * `stream` must be null or a live handle; it is invalid afterwards.
 */
void rs_stream_free(struct RsStream *stream);

/**
 * # Safety
 * `out_value` must be valid for writes.
 */
enum RsStatus rs_digamma(double x, double *out_value);

/**
 * E[log(p/(1-p))] for p ~ Beta(alpha1, alpha2) by adaptive quadrature.
 *
 * # Safety
 * `out_value` must be valid for writes.
 */
enum RsStatus rs_log_odds_quadrature(double alpha1, double alpha2, double *out_value);

/**
 * # Safety
 * `out_result` must be valid for writes.
 */
enum RsStatus rs_criterion(double alpha1, double alpha2, struct RsCriterion *out_result);

/**
 * Limit law Beta(red/d, blue/d) of a Polya urn's red fraction.
 *
 * # Safety
 * The out pointers must be valid for writes.
 */
enum RsStatus rs_polya_limit_law(double red,
                                 double blue,
                                 double d,
                                 double *out_alpha,
                                 double *out_beta);

/**
 * Exact total-variation distance between the direct and urn trajectory
 * laws up to `horizon` jumps.
 *
 * # Safety
 * `out_tv` must be valid for writes.
 */
enum RsStatus rs_urn_verify(double a,
                            double delta,
                            int64_t l0,
                            int64_t r0,
                            size_t horizon,
                            bool allow_sub_unit,
                            double *out_tv);

/**
 * One coupled run until l = r or `max_events` events.
 *
 * # Safety
 * `out_summary` must be valid for writes.
 */
enum RsStatus rs_coupling_run(double a,
                              double delta,
                              int64_t l0,
                              int64_t r0,
                              uint64_t max_events,
                              uint64_t seed,
                              uint64_t stream_id,
                              uint64_t env_seed,
                              struct RsCouplingSummary *out_summary);

/**
 * # Safety
 * `out_handle` must be valid for writes.
 */
enum RsStatus rs_direct_new(double a,
                            double delta,
                            int64_t l0,
                            int64_t r0,
                            size_t n_particles,
                            uint64_t seed,
                            uint64_t stream_id,
                            struct RsDirect **out_handle);

/**
 * Advance one event; reports the mover and its jump.
 *
 * # Safety
 * `sim` must be a live handle; out pointers valid for writes.
 */
enum RsStatus rs_direct_step(struct RsDirect *sim,
                             size_t *out_particle,
                             int64_t *out_from,
                             int64_t *out_to);

/**
 * Copy up to `len` particle positions into `buf`; writes the particle count.
 *
 * # Safety
 * `sim` must be a live handle; `buf` valid for `len` writes.
 */
enum RsStatus rs_direct_positions(struct RsDirect *sim,
                                  int64_t *buf,
                                  size_t len,
                                  size_t *out_count);

/**
 * # Safety
 * `sim` must be null or a live handle; it is invalid afterwards.
 */
void rs_direct_free(struct RsDirect *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REINFORCE_SIM_H */
