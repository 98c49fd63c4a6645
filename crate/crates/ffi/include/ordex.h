#ifndef ORDEX_H
#define ORDEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum OrdexStatus {
  ORDEX_STATUS_OK = 0,
  ORDEX_STATUS_NULL_ARGUMENT = 1,
  ORDEX_STATUS_INVALID_UTF8 = 2,
  ORDEX_STATUS_INVALID_INPUT = 3,
  // The input was valid but yields no value (e.g. an unresolved setback).
  ORDEX_STATUS_NO_VALUE = 4,
  ORDEX_STATUS_RUN_FAILED = 5,
  ORDEX_STATUS_PANIC = 6,
} OrdexStatus;

// Opaque scripted-backend handle.
typedef struct OrdexBackend OrdexBackend;

// Opaque decision-tree handle.
typedef struct OrdexGraph OrdexGraph;

// Accuracy, precision and recall as fractions; NaN when undefined.
typedef struct OrdexMetrics {
  double accuracy;
  double precision;
  double recall;
} OrdexMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into the library on this thread.
const char *ordex_last_error(void);

// Library version, a static string.
const char *ordex_version(void);

// Release a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ordex_string_free(char *s);

// Fraction of the candidate's distinct n-grams found in the source.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum OrdexStatus ordex_ngram_similarity(const char *candidate,
                                        const char *source,
                                        size_t n,
                                        double *out);

// Token estimate used for chunk budgets.
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
enum OrdexStatus ordex_estimate_tokens(const char *text, size_t *out);

// Effective setback in feet for a JSON setback spec and reference turbine.
//
// # Safety
// `spec_json` must be NUL-terminated; `out` must be writable.
enum OrdexStatus ordex_effective_setback(const char *spec_json,
                                         double hub_height_ft,
                                         double blade_length_ft,
                                         double *out);

// Parse a final answer such as "The setback is 1,250 feet." into
// `{"value": 1250.0, "unit": "feet"}`.
//
// # Safety
// `text` must be NUL-terminated; `out_json` must be writable.
enum OrdexStatus ordex_parse_setback_statement(const char *text, char **out_json);

// Metrics from confusion counts.
//
// # Safety
// `out` must be writable.
enum OrdexStatus ordex_metrics(uint64_t correct_tp,
                               uint64_t incorrect_tp,
                               uint64_t false_negative,
                               uint64_t false_positive,
                               uint64_t true_negative,
                               struct OrdexMetrics *out);

// Load a tree from TOML. The graph is not validated; see
// [`ordex_graph_validate`].
//
// # Safety
// `toml` must be NUL-terminated; `out` must be writable.
enum OrdexStatus ordex_graph_from_toml(const char *toml, struct OrdexGraph **out);

// The built-in tree for a feature (e.g. "structures_nonparticipating").
//
// # Safety
// `feature_name` must be NUL-terminated; `out` must be writable.
enum OrdexStatus ordex_graph_builtin(const char *feature_name,
                                     double hub_height_ft,
                                     double blade_length_ft,
                                     struct OrdexGraph **out);

// Structural problems as a JSON array of messages; `[]` when valid.
//
// # Safety
// `graph` must be a live handle; `out_json` must be writable.
enum OrdexStatus ordex_graph_validate(const struct OrdexGraph *graph, char **out_json);

// Serialize a tree to TOML. Trees with custom prompts or conditions fail
// with `InvalidInput`.
//
// # Safety
// `graph` must be a live handle; `out_toml` must be writable.
enum OrdexStatus ordex_graph_to_toml(const struct OrdexGraph *graph, char **out_toml);

// # Safety
// `graph` must come from this library and not have been freed. Null is ignored.
void ordex_graph_free(struct OrdexGraph *graph);

// An empty scripted backend; add replies with [`ordex_backend_add`].
//
// # Safety
// `out` must be writable.
enum OrdexStatus ordex_backend_scripted_new(struct OrdexBackend **out);

// A scripted backend loaded from every `*.json` script in `dir`.
//
// # Safety
// `dir` must be NUL-terminated; `out` must be writable.
enum OrdexStatus ordex_backend_scripted_from_dir(const char *dir, struct OrdexBackend **out);

// Reply `response` to a user message equal to `user`, or containing it
// when `contains` is nonzero.
//
// # Safety
// `backend` must be a live handle not in use by another thread.
enum OrdexStatus ordex_backend_add(struct OrdexBackend *backend,
                                   const char *user,
                                   const char *response,
                                   int contains);

// Requests the backend has received. Returns 0 for a null handle.
//
// # Safety
// `backend` must be a live handle or null.
size_t ordex_backend_calls(const struct OrdexBackend *backend);

// # Safety
// `backend` must come from this library and not have been freed. Null is ignored.
void ordex_backend_free(struct OrdexBackend *backend);

// Walk `graph` over `text`; the outcome (leaf or no-match, with path and
// transcript) is written as JSON.
//
// # Safety
// Handles must be live; strings NUL-terminated; `out_json` writable.
enum OrdexStatus ordex_run(const struct OrdexGraph *graph,
                           const char *text,
                           const char *feature_name,
                           const struct OrdexBackend *backend,
                           char **out_json);

// Extract ordinance records from distilled text with the built-in trees.
// `features` is "all" or a comma-separated list. Writes a JSON array of
// records in `features` order.
//
// # Safety
// `backend` must be a live handle; strings NUL-terminated; `out_json` writable.
enum OrdexStatus ordex_extract(const char *county,
                               const char *state,
                               const char *distilled_text,
                               const char *features,
                               const struct OrdexBackend *backend,
                               char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORDEX_H */
