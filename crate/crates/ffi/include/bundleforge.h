#ifndef BUNDLEFORGE_H
#define BUNDLEFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum bf_status {
  BF_STATUS_OK = 0,
  /**
   * The computation ran and some axiom or check failed.
   */
  BF_STATUS_AXIOM_FAILURE = 1,
  /**
   * Malformed document, bad shape, bad tolerance or unknown group.
   */
  BF_STATUS_INPUT_ERROR = 2,
  /**
   * The mathematics refused: non-regular fiber, not an ideal, etc.
   */
  BF_STATUS_MATH_ERROR = 3,
  BF_STATUS_NULL_POINTER = 4,
  BF_STATUS_PANIC = 5,
} bf_status;

typedef struct bf_bundle bf_bundle;

typedef struct bf_classification bf_classification;

typedef struct bf_tpa bf_tpa;

/**
 * Tolerances and seed shared by all calls taking a configuration.
 */
typedef struct bf_config {
  double eps_eq;
  double eps_rank;
  uint64_t seed;
} bf_config;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *bf_version(void);

/**
 * Default tolerances with seed 0.
 */
struct bf_config bf_config_default(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next `bf_*` call on this thread; do not free.
 */
const char *bf_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void bf_string_free(char *s);

/**
 * Parses a TPA document (optionally carrying a witness).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum bf_status bf_tpa_from_json(const char *json, struct bf_config cfg, struct bf_tpa **out);

/**
 * Random action of the preset group (`"cyclic:N"`, `"klein4"`, `"s3"`,
 * `"trivial"`) on blocks of the given sizes, restricted to about
 * `fraction` of them. The handle carries its witness.
 *
 * # Safety
 * `group` must be NUL-terminated, `sizes` must point to `n_sizes` values and
 * `out` must be writable.
 */
enum bf_status bf_tpa_generate(const char *group,
                               const size_t *sizes,
                               size_t n_sizes,
                               double fraction,
                               struct bf_config cfg,
                               struct bf_tpa **out);

/**
 * Runs the action axioms. Returns `BF_AXIOM_FAILURE` when any fails; the
 * JSON report is written to `report` either way when it is not NULL.
 *
 * # Safety
 * `tpa` must be a live handle; `report` may be NULL.
 */
enum bf_status bf_tpa_validate(const struct bf_tpa *tpa, char **report);

/**
 * # Safety
 * `tpa` must be a live handle and `out` writable.
 */
enum bf_status bf_tpa_to_json(const struct bf_tpa *tpa, char **out);

/**
 * Group order of the action.
 *
 * # Safety
 * `tpa` must be a live handle and `out` writable.
 */
enum bf_status bf_tpa_group_order(const struct bf_tpa *tpa, size_t *out);

/**
 * # Safety
 * `tpa` must be NULL or a handle not yet freed.
 */
void bf_tpa_free(struct bf_tpa *tpa);

/**
 * Concrete representation of the semidirect bundle through the witness
 * the handle carries.
 *
 * # Safety
 * `tpa` must be a live handle and `out` writable.
 */
enum bf_status bf_bundle_represent(const struct bf_tpa *tpa, struct bf_bundle **out);

/**
 * Parses a concrete bundle document.
 *
 * # Safety
 * `json` must be NUL-terminated and `out` writable.
 */
enum bf_status bf_bundle_from_json(const char *json, struct bf_config cfg, struct bf_bundle **out);

/**
 * # Safety
 * `bundle` must be a live handle and `out` writable.
 */
enum bf_status bf_bundle_to_json(const struct bf_bundle *bundle, char **out);

/**
 * Runs the bundle axiom suite with `cfg.seed` for the sampled norm checks.
 *
 * # Safety
 * `bundle` must be a live handle; `report` may be NULL.
 */
enum bf_status bf_bundle_check(const struct bf_bundle *bundle, struct bf_config cfg, char **report);

/**
 * # Safety
 * `bundle` must be NULL or a handle not yet freed.
 */
void bf_bundle_free(struct bf_bundle *bundle);

/**
 * Classifies a regular bundle. The handle is written whenever the pipeline
 * completes, so a caller can inspect reports even on `BF_AXIOM_FAILURE`.
 *
 * # Safety
 * `bundle` must be a live handle and `out` writable.
 */
enum bf_status bf_classify(const struct bf_bundle *bundle,
                           struct bf_config cfg,
                           struct bf_classification **out);

/**
 * Largest residual over all classification reports.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum bf_status bf_classification_max_residual(const struct bf_classification *c, double *out);

/**
 * The recovered frame, action and isometries as JSON.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum bf_status bf_classification_to_json(const struct bf_classification *c, char **out);

/**
 * # Safety
 * `c` must be NULL or a handle not yet freed.
 */
void bf_classification_free(struct bf_classification *c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BUNDLEFORGE_H */
