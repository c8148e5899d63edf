#ifndef POOLALLOC_H
#define POOLALLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum PaStatus {
  PA_STATUS_OK = 0,
  PA_STATUS_NULL_POINTER = 1,
  PA_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON or a scenario that breaks an invariant.
   */
  PA_STATUS_INVALID_INPUT = 3,
  /**
   * The strategy is infeasible for the scenario.
   */
  PA_STATUS_INFEASIBLE = 4,
  /**
   * More feasible strategies than the requested cap.
   */
  PA_STATUS_CAP_EXCEEDED = 5,
  PA_STATUS_INDEX_OUT_OF_RANGE = 6,
  PA_STATUS_PANIC = 7,
} PaStatus;

/**
 * Opaque frontier handle.
 */
typedef struct PaFrontier PaFrontier;

/**
 * Opaque scenario handle.
 */
typedef struct PaScenario PaScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *pa_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pa_version(void);

/**
 * Parses a scenario from NUL-terminated JSON.
 *
 * # Safety
 * `json` must be NULL or a valid NUL-terminated string; `out` must be NULL
 * or writable.
 */
enum PaStatus pa_scenario_from_json(const char *json, struct PaScenario **out);

/**
 * # Safety
 * `scenario` must be NULL or a handle from [`pa_scenario_from_json`] not
 * yet freed.
 */
void pa_scenario_free(struct PaScenario *scenario);

/**
 * Number of categories, or 0 for NULL.
 *
 * # Safety
 * `scenario` must be NULL or a live handle.
 */
size_t pa_scenario_categories(const struct PaScenario *scenario);

/**
 * Evaluates the strategy `(t, g)` of length `k`. Writes the health
 * objective to `health` and the `k` quarantine objectives to `quarantine`.
 *
 * # Safety
 * `t` and `g` must point to `k` readable values, `quarantine` to `k`
 * writable values and `health` to one.
 */
enum PaStatus pa_evaluate(const struct PaScenario *scenario,
                          const uint32_t *t,
                          const uint32_t *g,
                          size_t k,
                          double *health,
                          double *quarantine);

/**
 * Computes the exact frontier (`desired == 0`) or a bucketed frontier of
 * about `desired` solutions. `cap == 0` means no cap.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum PaStatus pa_frontier_compute(const struct PaScenario *scenario,
                                  size_t desired,
                                  uint64_t seed,
                                  uint64_t cap,
                                  struct PaFrontier **out);

/**
 * # Safety
 * `frontier` must be NULL or a live handle.
 */
size_t pa_frontier_len(const struct PaFrontier *frontier);

/**
 * Copies solution `index`: its id, health objective, and `k` values each of
 * `t`, `g` and `quarantine`.
 *
 * # Safety
 * Output pointers must be writable for the stated lengths.
 */
enum PaStatus pa_frontier_get(const struct PaFrontier *frontier,
                              size_t index,
                              size_t k,
                              uint64_t *id,
                              double *health,
                              uint32_t *t,
                              uint32_t *g,
                              double *quarantine);

/**
 * Frontier as JSON; release with [`pa_string_free`]. NULL on failure.
 *
 * # Safety
 * `frontier` must be NULL or a live handle.
 */
char *pa_frontier_to_json(const struct PaFrontier *frontier);

/**
 * # Safety
 * `frontier` must be NULL or a handle from [`pa_frontier_compute`] not yet
 * freed.
 */
void pa_frontier_free(struct PaFrontier *frontier);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void pa_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POOLALLOC_H */
