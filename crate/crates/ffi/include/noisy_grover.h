#ifndef NOISY_GROVER_H
#define NOISY_GROVER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; 2–4 match the command-line exit codes.
typedef enum NgStatus {
  NG_STATUS_OK = 0,
  NG_STATUS_NULL_POINTER = 1,
  NG_STATUS_VALIDATION = 2,
  NG_STATUS_TOLERANCE = 3,
  NG_STATUS_RESOURCE = 4,
  NG_STATUS_DOMAIN = 5,
  NG_STATUS_STATE = 6,
  NG_STATUS_NUMERICAL = 7,
  NG_STATUS_FIT = 8,
  NG_STATUS_IO = 9,
  NG_STATUS_OUT_OF_RANGE = 10,
  NG_STATUS_PANIC = 11,
} NgStatus;

typedef enum NgChannelKind {
  NG_CHANNEL_KIND_PHASE_FLIP = 0,
  NG_CHANNEL_KIND_AMPLITUDE_DAMPING = 1,
} NgChannelKind;

typedef enum NgEngine {
  NG_ENGINE_ORBIT = 0,
  NG_ENGINE_MPDO = 1,
  NG_ENGINE_DENSE = 2,
} NgEngine;

typedef enum NgStrategy {
  NG_STRATEGY_NAIVE = 0,
  NG_STRATEGY_MAX_NON_UNITARITY = 1,
  NG_STRATEGY_GREEDY_ENTROPY_MIN = 2,
} NgStrategy;

// Opaque single-qubit Kraus channel.
typedef struct NgChannel NgChannel;

// Opaque trajectory ensemble summary.
typedef struct NgEnsemble NgEnsemble;

// Opaque list of sweep points.
typedef struct NgSweep NgSweep;

// Opaque per-iteration run trace.
typedef struct NgTrace NgTrace;

// One row of a run trace.
typedef struct NgRecord {
  uint64_t k;
  double success_probability;
  // Bits; NaN when the engine has no chain to cut.
  double entropy;
  double trace_drift;
  double discarded_weight;
} NgRecord;

// Trajectory run settings. Zero in `iters`, `cut` or `chi` selects the
// default (optimal M, n/2, 64).
typedef struct NgTrajectoryConfig {
  uint32_t n;
  enum NgChannelKind channel;
  double p;
  uint32_t iters;
  uint32_t n_traj;
  enum NgStrategy strategy;
  uint64_t seed;
  uint32_t chi;
  double cutoff;
  uint32_t cut;
} NgTrajectoryConfig;

// One iteration of an ensemble summary.
typedef struct NgEnsembleRow {
  double mean_te;
  double te_stderr;
  // 5, 25, 50, 75 and 95th percentiles of the trajectory entropies.
  double percentiles[5];
  double mean_success;
  double success_stderr;
} NgEnsembleRow;

typedef struct NgScalingPoint {
  uint32_t n;
  double p;
  double p_f;
  double excess;
  bool converged;
} NgScalingPoint;

typedef struct NgFit {
  // (α, β) for phase flip, (γ, δ) for amplitude damping.
  double exponents[2];
  double standard_errors[2];
  double residual_norm;
  uint64_t point_count;
} NgFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *ng_last_error(void);

void ng_clear_error(void);

// Library version, a static NUL-terminated string.
const char *ng_version(void);

// floor(π/4 · 2^(n/2)).
uint64_t ng_optimal_iterations(uint32_t n);

// sin²((2k+1)·asin(2^(−n/2))).
//
// # Safety
// `out` must be a valid pointer to a double.
enum NgStatus ng_ideal_success_probability(uint32_t n, uint64_t k, double *out);

// # Safety
// `out` must be a valid pointer.
enum NgStatus ng_channel_new(enum NgChannelKind kind_, double p, struct NgChannel **out);

// Frobenius norm of Σ E†E − 1.
//
// # Safety
// `ch` must come from [`ng_channel_new`]; `out` must be valid.
enum NgStatus ng_channel_completeness(const struct NgChannel *ch, double *out);

// # Safety
// `ch` must come from [`ng_channel_new`] or be NULL.
void ng_channel_free(struct NgChannel *ch);

// Noiseless MPS run with bond dimension `chi` (2 is exact).
//
// # Safety
// `omega` is NULL or a NUL-terminated bitstring; `out` must be valid.
enum NgStatus ng_run_ideal(uint32_t n,
                           const char *omega,
                           uint64_t iters,
                           uint32_t chi,
                           struct NgTrace **out);

// Noisy density-operator run. `engine` selects MPDO (with `chi`, `cutoff`),
// exact dense or the exact permutation-orbit engine.
//
// # Safety
// `ch` must be a live channel handle, `omega` NULL or a NUL-terminated
// bitstring, `out` valid.
enum NgStatus ng_run_noisy(enum NgEngine engine,
                           uint32_t n,
                           const char *omega,
                           const struct NgChannel *ch,
                           uint64_t iters,
                           uint32_t chi,
                           double cutoff,
                           struct NgTrace **out);

// # Safety
// `trace` must be a live handle or NULL (returns 0).
uint64_t ng_trace_len(const struct NgTrace *trace);

// # Safety
// `trace` must be a live handle; `out` valid.
enum NgStatus ng_trace_get(const struct NgTrace *trace, uint64_t index, struct NgRecord *out);

// # Safety
// `trace` must be a live handle or NULL.
void ng_trace_free(struct NgTrace *trace);

// Defaults for a trajectory run on `n` qubits.
struct NgTrajectoryConfig ng_trajectory_config_default(uint32_t n,
                                                       enum NgChannelKind channel,
                                                       double p);

// Runs an ensemble on `workers` threads (0 = global pool). Output does not
// depend on `workers`.
//
// # Safety
// `cfg` and `out` must be valid pointers.
enum NgStatus ng_trajectories_run(const struct NgTrajectoryConfig *cfg,
                                  uint32_t workers,
                                  struct NgEnsemble **out);

// Number of rows (iterations + 1).
//
// # Safety
// `ens` must be a live handle or NULL (returns 0).
uint64_t ng_ensemble_len(const struct NgEnsemble *ens);

// Final mean success probability and its standard error.
//
// # Safety
// `ens` must be a live handle; `mean` and `stderr_` valid.
enum NgStatus ng_ensemble_success(const struct NgEnsemble *ens, double *mean, double *stderr_);

// # Safety
// `ens` must be a live handle; `out` valid.
enum NgStatus ng_ensemble_get(const struct NgEnsemble *ens,
                              uint64_t index,
                              struct NgEnsembleRow *out);

// # Safety
// `ens` must be a live handle or NULL.
void ng_ensemble_free(struct NgEnsemble *ens);

// Final-success sweep over `n_list` × `p_grid`. Amplitude damping averages
// over targets binomially; phase flip uses the all-ones target.
//
// # Safety
// `n_list` and `p_grid` must point to `n_len` and `p_len` values; `out`
// must be valid.
enum NgStatus ng_sweep_run(enum NgChannelKind channel,
                           enum NgEngine engine,
                           const uint32_t *n_list,
                           size_t n_len,
                           const double *p_grid,
                           size_t p_len,
                           uint32_t chi,
                           struct NgSweep **out);

// # Safety
// `sweep` must be a live handle or NULL (returns 0).
uint64_t ng_sweep_len(const struct NgSweep *sweep);

// # Safety
// `sweep` must be a live handle; `out` valid.
enum NgStatus ng_sweep_get(const struct NgSweep *sweep, uint64_t index, struct NgScalingPoint *out);

// Fits log(excess) = −b·n − a·ln p over points with floor ≤ excess ≤
// ceiling and p ≤ p_max.
//
// # Safety
// `sweep` must be a live handle; `out` valid.
enum NgStatus ng_sweep_fit(const struct NgSweep *sweep,
                           enum NgChannelKind channel,
                           double floor,
                           double ceiling,
                           double p_max,
                           bool intercept,
                           struct NgFit *out);

// # Safety
// `sweep` must be a live handle or NULL.
void ng_sweep_free(struct NgSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOISY_GROVER_H */
