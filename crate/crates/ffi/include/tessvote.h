#ifndef TESSVOTE_H
#define TESSVOTE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Pass as `p` to request the infinite-face tessellation (a tree).
 */
#define TV_P_INFINITE 0

typedef enum TvBoundary {
  TV_BOUNDARY_ADVERSARIAL = 0,
  TV_BOUNDARY_FROZEN_ZERO = 1,
} TvBoundary;

typedef enum TvClass {
  TV_CLASS_NONE = 0,
  TV_CLASS_TRANSIENT_ONLY = 1,
  TV_CLASS_COMBINED = 2,
} TvClass;

typedef enum TvStatus {
  TV_STATUS_OK = 0,
  TV_STATUS_NULL_POINTER = 1,
  TV_STATUS_INVALID_ARGUMENT = 2,
  TV_STATUS_SPHERICAL_UNSUPPORTED = 3,
  TV_STATUS_BUDGET_EXCEEDED = 4,
  TV_STATUS_NOT_APPLICABLE = 5,
  TV_STATUS_OUTSIDE_POSITIVE_REGION = 6,
  TV_STATUS_INSUFFICIENT_MARGIN = 7,
  TV_STATUS_DOMAIN_ERROR = 8,
  TV_STATUS_BUFFER_TOO_SMALL = 9,
  TV_STATUS_INTERNAL = 10,
  TV_STATUS_PANIC = 11,
} TvStatus;

/**
 * Opaque handle to a voting automaton on a tessellation.
 */
typedef struct TvAutomaton TvAutomaton;

/**
 * Opaque handle to a built tessellation.
 */
typedef struct TvTessellation TvTessellation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *tv_last_error_message(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void tv_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tv_version(void);

/**
 * Build the truncation of {p,q} with `generations` generations.
 * `p` = TV_P_INFINITE selects the tree; `budget` = 0 keeps the default vertex budget.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum TvStatus tv_tessellation_build(uint32_t p,
                                    uint32_t q,
                                    uint32_t generations,
                                    size_t budget,
                                    struct TvTessellation **out);

/**
 * # Safety
 * `t` must come from [`tv_tessellation_build`] and not have been freed. Null is ignored.
 */
void tv_tessellation_free(struct TvTessellation *t);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t tv_tessellation_vertex_count(const struct TvTessellation *t);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t tv_tessellation_edge_count(const struct TvTessellation *t);

/**
 * Generation (graph distance from the origin) of vertex `v`.
 *
 * # Safety
 * `t` must be a live handle and `out` writable.
 */
enum TvStatus tv_tessellation_generation(const struct TvTessellation *t, uint32_t v, uint32_t *out);

/**
 * Neighbors of `v` in clockwise rotation order. Writes the degree to `len`;
 * returns BufferTooSmall (with `len` set) when `cap` is insufficient.
 *
 * # Safety
 * `t` must be a live handle, `buf` must hold `cap` elements (may be null when `cap` is 0), `len` writable.
 */
enum TvStatus tv_tessellation_neighbors(const struct TvTessellation *t,
                                        uint32_t v,
                                        uint32_t *buf,
                                        size_t cap,
                                        size_t *len);

/**
 * Run the structural audit; writes whether it passed and, if `report` is non-null, its JSON.
 *
 * # Safety
 * `t` must be a live handle; `pass` writable; `report` null or writable.
 */
enum TvStatus tv_tessellation_audit(const struct TvTessellation *t, bool *pass, char **report);

/**
 * Serialize the tessellation to JSON.
 *
 * # Safety
 * `t` must be a live handle and `out` writable.
 */
enum TvStatus tv_tessellation_to_json(const struct TvTessellation *t, char **out);

/**
 * Majority automaton on `t`. With `weakened`, the weakening rule for {p,q} is applied.
 * The automaton keeps its own reference to the tessellation.
 *
 * # Safety
 * `t` must be a live handle and `out` writable.
 */
enum TvStatus tv_automaton_build(const struct TvTessellation *t,
                                 bool weakened,
                                 uint32_t speedup,
                                 struct TvAutomaton **out);

/**
 * # Safety
 * `a` must come from [`tv_automaton_build`] and not have been freed. Null is ignored.
 */
void tv_automaton_free(struct TvAutomaton *a);

/**
 * Full and reduced vote thresholds of cell `v`.
 *
 * # Safety
 * `a` must be a live handle; `threshold` and `reduced` writable.
 */
enum TvStatus tv_automaton_threshold(const struct TvAutomaton *a,
                                     uint32_t v,
                                     uint32_t *threshold,
                                     uint32_t *reduced);

/**
 * Monte Carlo origin error rate for t = 0..=steps, written to `rates` (steps + 1 entries).
 * `workers` = 0 uses the global pool.
 *
 * # Safety
 * `a` must be a live handle and `rates` must hold `steps + 1` doubles.
 */
enum TvStatus tv_monte_carlo(const struct TvAutomaton *a,
                             double alpha,
                             double beta,
                             uint64_t seed,
                             uint32_t steps,
                             size_t trials,
                             enum TvBoundary boundary,
                             size_t workers,
                             double *rates);

/**
 * Fault-tolerance class of {p,q}.
 *
 * # Safety
 * `out` must be writable.
 */
enum TvStatus tv_classify(uint32_t p, uint32_t q, enum TvClass *out);

/**
 * Bound q^{2qM+1} eps / (1 - q^{2qM} eps), capped at 1.
 *
 * # Safety
 * `out` must be writable.
 */
enum TvStatus tv_error_bound(uint32_t q, double m, double eps, double *out);

/**
 * Check the flow certificate of {p,q} on `generations` generations; writes the verdict and,
 * if `report` is non-null, the JSON report.
 *
 * # Safety
 * `pass` writable; `report` null or writable.
 */
enum TvStatus tv_verify_flows(uint32_t p,
                              uint32_t q,
                              uint32_t generations,
                              bool *pass,
                              char **report);

/**
 * Parse a face degree ("inf" or an integer) into the `p` convention of this API.
 *
 * # Safety
 * `s` must be a valid NUL-terminated string; `out` writable.
 */
enum TvStatus tv_parse_face_degree(const char *s, uint32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TESSVOTE_H */
