#ifndef STANCETOPIC_H
#define STANCETOPIC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StStance {
  ST_STANCE_UNLABELED = 0,
  ST_STANCE_CONTROL = 1,
  ST_STANCE_RIGHTS = 2,
} StStance;

typedef enum StStatus {
  ST_STATUS_OK = 0,
  ST_STATUS_NULL_POINTER = 1,
  ST_STATUS_INVALID_UTF8 = 2,
  ST_STATUS_ARGUMENT = 3,
  ST_STATUS_IO = 4,
  ST_STATUS_PARSE = 5,
  ST_STATUS_FORMAT = 6,
  ST_STATUS_MISSING_ARTIFACT = 7,
  ST_STATUS_BUFFER_TOO_SMALL = 8,
  ST_STATUS_INTERNAL = 9,
  ST_STATUS_PANIC = 10,
} StStatus;

typedef struct StGazetteer StGazetteer;

typedef struct StLexicon StLexicon;

/**
 * Trained topic model with its vocabulary and the default stopword list.
 */
typedef struct StModel StModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *st_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *st_version(void);

/**
 * Loads a model file and the vocabulary it was trained with.
 *
 * # Safety
 * Path arguments must be NUL-terminated strings; `out` must be writable.
 */
enum StStatus st_model_load(const char *model_path, const char *vocab_path, struct StModel **out);

/**
 * # Safety
 * `model` must come from [`st_model_load`] and not be used afterwards.
 */
void st_model_free(struct StModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum StStatus st_model_num_topics(const struct StModel *model, size_t *out);

/**
 * Tokenises `text`, infers its topic proportions and writes them to
 * `theta[0..len]`; `len` must equal the topic count.
 *
 * # Safety
 * `theta` must point to `len` writable doubles.
 */
enum StStatus st_model_infer_text(const struct StModel *model,
                                  const char *text,
                                  size_t iterations,
                                  uint64_t seed,
                                  double *theta,
                                  size_t len);

/**
 * The built-in hashtag lexicon.
 *
 * # Safety
 * `out` must be writable.
 */
enum StStatus st_lexicon_default(struct StLexicon **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum StStatus st_lexicon_load(const char *path, struct StLexicon **out);

/**
 * # Safety
 * `lexicon` must come from this library and not be used afterwards.
 */
void st_lexicon_free(struct StLexicon *lexicon);

/**
 * Labels a tweet text by majority vote over its hashtags.
 *
 * # Safety
 * `lexicon` must be a live handle, `text` NUL-terminated, `out` writable.
 */
enum StStatus st_lexicon_label(const struct StLexicon *lexicon,
                               const char *text,
                               enum StStance *out);

/**
 * The built-in US gazetteer.
 *
 * # Safety
 * `out` must be writable.
 */
enum StStatus st_gazetteer_builtin(struct StGazetteer **out);

/**
 * Loads an alias table and an optional (NULL) ambiguity list.
 *
 * # Safety
 * Non-null strings must be NUL-terminated; `out` must be writable.
 */
enum StStatus st_gazetteer_load(const char *table, const char *ambiguity, struct StGazetteer **out);

/**
 * # Safety
 * `gazetteer` must come from this library and not be used afterwards.
 */
void st_gazetteer_free(struct StGazetteer *gazetteer);

/**
 * Resolves a profile location to a two-letter state code written to
 * `code[0..3]` (NUL-terminated); an empty string means unresolved.
 *
 * # Safety
 * `code` must point to at least 3 writable bytes.
 */
enum StStatus st_gazetteer_resolve(const struct StGazetteer *gazetteer,
                                   const char *location,
                                   char *code);

/**
 * Sample Pearson correlation of `x[0..n]` and `y[0..n]`.
 *
 * # Safety
 * `x` and `y` must point to `n` readable doubles; `out` must be writable.
 */
enum StStatus st_pearson(const double *x, const double *y, size_t n, double *out);

/**
 * Ordinary least squares of `y` on `x`.
 *
 * # Safety
 * `x` and `y` must point to `n` readable doubles; outputs must be writable.
 */
enum StStatus st_least_squares(const double *x,
                               const double *y,
                               size_t n,
                               double *slope,
                               double *intercept,
                               double *r_squared);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STANCETOPIC_H */
