#ifndef FAIRLENS_H
#define FAIRLENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_UTF8 = 2,
  FL_STATUS_PARSE_ERROR = 3,
  FL_STATUS_INVALID_ARGUMENT = 4,
  FL_STATUS_METRIC_UNDEFINED = 5,
  FL_STATUS_EXECUTION_ERROR = 6,
  FL_STATUS_PANIC = 7,
} FlStatus;

/**
 * A collection of snippet records for metric computation.
 */
typedef struct FlCorpus FlCorpus;

/**
 * A metamorphic test suite for one task.
 */
typedef struct FlSuite FlSuite;

/**
 * A parsed task definition.
 */
typedef struct FlTask FlTask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next fairlens call on the same thread.
 */
const char *fl_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void fl_string_free(char *s);

/**
 * Parses a task document. Schema errors fail; neutrality rules are checked
 * separately with [`fl_task_validate`].
 *
 * # Safety
 * `json_text` must be a nul-terminated string; `out` must be writable.
 */
enum FlStatus fl_task_parse(const char *json_text, struct FlTask **out);

/**
 * # Safety
 * `task` must come from [`fl_task_parse`] and not be used afterwards.
 */
void fl_task_free(struct FlTask *task);

/**
 * Writes the task id.
 *
 * # Safety
 * `task` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_task_id(const struct FlTask *task, char **out);

/**
 * Writes the rule violations as a JSON array (empty when valid).
 *
 * # Safety
 * `task` must be a live handle; `out_json` must be writable.
 */
enum FlStatus fl_task_validate(const struct FlTask *task, char **out_json);

/**
 * Renders the code prompt for `strategy` (`default`, `cot` or `pcot`).
 *
 * # Safety
 * `task` must be a live handle, `strategy` a nul-terminated string and
 * `out` writable.
 */
enum FlStatus fl_prompt_render(const struct FlTask *task, const char *strategy, char **out);

/**
 * Samples a suite of at most `budget` tuples.
 *
 * # Safety
 * `task` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_suite_synthesize(const struct FlTask *task,
                                  size_t budget,
                                  uint64_t seed,
                                  struct FlSuite **out);

/**
 * Builds the exhaustive suite over every non-sensitive combination.
 *
 * # Safety
 * `task` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_suite_full(const struct FlTask *task, struct FlSuite **out);

/**
 * Number of tuples in the suite.
 *
 * # Safety
 * `suite` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_suite_len(const struct FlSuite *suite, size_t *out);

/**
 * # Safety
 * `suite` must be a live handle; `out_json` must be writable.
 */
enum FlStatus fl_suite_to_json(const struct FlSuite *suite, char **out_json);

/**
 * # Safety
 * `suite` must come from this library and not be used afterwards.
 */
void fl_suite_free(struct FlSuite *suite);

/**
 * Runs `code` against `suite` with the built-in interpreter and writes a
 * snippet record as JSON: executability, the bias verdict and attribute
 * usage. The record can be fed to [`fl_corpus_add_json`].
 *
 * # Safety
 * Handles must be live, strings nul-terminated and `out_json` writable.
 */
enum FlStatus fl_snippet_evaluate(const struct FlTask *task,
                                  const struct FlSuite *suite,
                                  const char *snippet_id,
                                  const char *code,
                                  char **out_json);

/**
 * Classifies each task attribute as TP, TN, FP or FN for `code`; JSON out.
 *
 * # Safety
 * `task` must be live, strings nul-terminated and `out_json` writable.
 */
enum FlStatus fl_attribute_usage(const struct FlTask *task,
                                 const char *snippet_id,
                                 const char *code,
                                 char **out_json);

/**
 * Creates an empty corpus.
 *
 * # Safety
 * `label` must be nul-terminated; `out` must be writable.
 */
enum FlStatus fl_corpus_new(const char *label, struct FlCorpus **out);

/**
 * Appends a snippet record given as JSON.
 *
 * # Safety
 * `corpus` must be a live handle; `record_json` must be nul-terminated.
 */
enum FlStatus fl_corpus_add_json(struct FlCorpus *corpus, const char *record_json);

/**
 * # Safety
 * `corpus` must come from [`fl_corpus_new`] and not be used afterwards.
 */
void fl_corpus_free(struct FlCorpus *corpus);

/**
 * Code bias score in percent, overall when `dimension` is null.
 *
 * # Safety
 * `corpus` must be live; `dimension` null or nul-terminated; `out` writable.
 */
enum FlStatus fl_metric_cbs(const struct FlCorpus *corpus, const char *dimension, double *out);

/**
 * Per-value favored ratios of one dimension as JSON.
 *
 * # Safety
 * `corpus` must be live; `dimension` nul-terminated; `out_json` writable.
 */
enum FlStatus fl_metric_bls(const struct FlCorpus *corpus, const char *dimension, char **out_json);

/**
 * # Safety
 * `corpus` must be live; `out` writable.
 */
enum FlStatus fl_metric_pass_at_attribute(const struct FlCorpus *corpus, double *out);

/**
 * Full metrics report of the corpus as JSON.
 *
 * # Safety
 * `corpus` must be live; `out_json` writable.
 */
enum FlStatus fl_corpus_report(const struct FlCorpus *corpus, char **out_json);

/**
 * Welch's two-sample t-test with a two-sided p-value.
 *
 * # Safety
 * `a` and `b` must point to `na` and `nb` readable doubles; outputs must be
 * writable.
 */
enum FlStatus fl_welch_t_test(const double *a,
                              size_t na,
                              const double *b,
                              size_t nb,
                              double *out_t,
                              double *out_p);

/**
 * Library version, statically allocated.
 */
const char *fl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRLENS_H */
