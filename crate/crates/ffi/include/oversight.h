#ifndef OVERSIGHT_H
#define OVERSIGHT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum OvStatus {
  OV_STATUS_OK = 0,
  OV_STATUS_NULL_POINTER = 1,
  OV_STATUS_INVALID_ARGUMENT = 2,
  // Output buffer smaller than required.
  OV_STATUS_BUFFER_TOO_SMALL = 3,
  OV_STATUS_DATASET = 4,
  OV_STATUS_FIT = 5,
  OV_STATUS_POLICY = 6,
  OV_STATUS_SELECTION = 7,
  OV_STATUS_VALUES = 8,
  // A Rust panic was caught at the boundary.
  OV_STATUS_INTERNAL = 9,
} OvStatus;

// Opaque standardized dataset.
typedef struct OvDataset OvDataset;

// Opaque fitted model.
typedef struct OvModel OvModel;

// Solver settings; obtain defaults from [`ov_fit_options_default`].
typedef struct OvFitOptions {
  size_t max_iters;
  double tolerance;
  double ridge;
  uint64_t seed;
} OvFitOptions;

// Summary of the constructed naive-vs-robust selection instance.
typedef struct OvObservation2 {
  // Number of rows actually used (raised to `ceil(2/delta)` if smaller).
  size_t n;
  size_t budget;
  double accuracy_a1;
  double accuracy_a2;
  // Accuracy of `A2` after the overseer spends its budget.
  double accuracy_a2_corrected;
  // 0 for `A1`, 1 for `A2`.
  size_t naive_winner;
  size_t robust_winner;
} OvObservation2;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message of this thread; empty when none. Valid until the next
// failing call on the same thread.
const char *ov_last_error_message(void);

// Bundled housing table, target `MEDV`, sensitive `B,TAX`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum OvStatus ov_dataset_bundled(struct OvDataset **out);

// Loads a CSV file; `sensitive` is a comma-separated column list.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum OvStatus ov_dataset_load_csv(const char *path,
                                  const char *target,
                                  const char *sensitive,
                                  struct OvDataset **out);

// # Safety
// `ds` must come from a dataset constructor and not be freed already.
void ov_dataset_free(struct OvDataset *ds);

// Rows, features and sensitive attributes.
//
// # Safety
// `ds` must be a live handle; out pointers may be null.
enum OvStatus ov_dataset_dims(const struct OvDataset *ds, size_t *n, size_t *d, size_t *m);

// Binary labels (`n` entries).
//
// # Safety
// `ds` must be a live handle; `out` must hold `capacity` bytes.
enum OvStatus ov_dataset_labels(const struct OvDataset *ds, uint8_t *out, size_t capacity);

struct OvFitOptions ov_fit_options_default(void);

// Fits with one weight per sensitive attribute. `opts` may be null for
// defaults.
//
// # Safety
// `ds` must be live, `weights` must hold `n_weights` values and `out` must
// be writable.
enum OvStatus ov_model_fit(const struct OvDataset *ds,
                           const double *weights,
                           size_t n_weights,
                           const struct OvFitOptions *opts,
                           struct OvModel **out);

// # Safety
// `model` must come from [`ov_model_fit`] and not be freed already.
void ov_model_free(struct OvModel *model);

// Coefficients on standardized features followed by the intercept
// (`d + 1` values). `len` receives the count even when the buffer is short.
//
// # Safety
// `model` must be live; `out` must hold `capacity` doubles; `len` may be null.
enum OvStatus ov_model_theta(const struct OvModel *model,
                             double *out,
                             size_t capacity,
                             size_t *len);

// Objective value reached by the solver.
//
// # Safety
// `model` must be live and `out` writable.
enum OvStatus ov_model_objective(const struct OvModel *model, double *out);

// Scores `θᵀx + b` for every row of `ds`.
//
// # Safety
// Handles must be live; `out` must hold `capacity` doubles.
enum OvStatus ov_model_scores(const struct OvModel *model,
                              const struct OvDataset *ds,
                              double *out,
                              size_t capacity);

// Recommended decisions (score ≥ 0) for every row of `ds`.
//
// # Safety
// Handles must be live; `out` must hold `capacity` bytes.
enum OvStatus ov_model_decisions(const struct OvModel *model,
                                 const struct OvDataset *ds,
                                 uint8_t *out,
                                 size_t capacity);

// Covariance statistic of feature `attr_index` with `decisions` (`n` bytes).
//
// # Safety
// `ds` must be live; `decisions` must hold `n` bytes; `out` writable.
enum OvStatus ov_rho_decision(const struct OvDataset *ds,
                              const uint8_t *decisions,
                              size_t n,
                              size_t attr_index,
                              double *out);

// Share of `decisions` equal to `labels`.
//
// # Safety
// Both arrays must hold `n` bytes; `out` writable.
enum OvStatus ov_accuracy(const uint8_t *decisions, const uint8_t *labels, size_t n, double *out);

// Overrides at most `floor(epsilon·n)` recommendations toward `target`.
//
// # Safety
// `recommended` and `target` must hold `n` bytes; `out` must hold
// `capacity` bytes; `overrides` may be null.
enum OvStatus ov_apply_epsilon_budget(const uint8_t *recommended,
                                      const uint8_t *target,
                                      size_t n,
                                      double epsilon,
                                      uint8_t *out,
                                      size_t capacity,
                                      size_t *overrides);

// Normalized Hamming distance of two decision vectors.
//
// # Safety
// Both arrays must hold `n` bytes; `out` writable.
enum OvStatus ov_deviation_fraction(const uint8_t *a, const uint8_t *b, size_t n, double *out);

// Builds the two-candidate instance where an ε-budget overseer reverses
// the naive choice, and reports both winners.
//
// # Safety
// `out` must be writable.
enum OvStatus ov_observation2(size_t n, double epsilon, double delta, struct OvObservation2 *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OVERSIGHT_H */
