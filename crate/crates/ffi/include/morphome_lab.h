#ifndef MORPHOME_LAB_H
#define MORPHOME_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MlStatus {
  ML_OK = 0,
  ML_NULL_POINTER = 1,
  ML_INVALID_UTF8 = 2,
  ML_INVALID_ARGUMENT = 3,
  ML_IO = 4,
  ML_FORMAT = 5,
  ML_NUMERICAL = 6,
  ML_PANIC = 7,
} MlStatus;

/**
 * A wordlikeness reference lexicon.
 */
typedef struct MlLexicon MlLexicon;

/**
 * A trained model loaded from a checkpoint.
 */
typedef struct MlModel MlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *ml_last_error(void);

/**
 * Library version as a static string.
 */
const char *ml_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void ml_string_free(char *s);

/**
 * Loads a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MlStatus ml_model_load(const char *path, struct MlModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`ml_model_load`], not yet freed.
 */
void ml_model_free(struct MlModel *model);

/**
 * Number of tokens in the model's vocabulary.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum MlStatus ml_model_vocab_size(const struct MlModel *model, size_t *out);

/**
 * Decodes one input. `input` holds whitespace-separated vocabulary tokens,
 * e.g. `"ʃ u t e s <V;IND;PRS;2;SG> # ..."`. `beam_width` 1 is greedy.
 * `max_len` counts output tokens including the end marker. On success
 * `*out_tokens` receives the space-separated output (free with
 * [`ml_string_free`]) and `*out_score` its total log-probability.
 *
 * # Safety
 * `model` must be a live handle, `input` a NUL-terminated string, and the
 * out-pointers writable.
 */
enum MlStatus ml_model_decode(const struct MlModel *model,
                              const char *input,
                              uint32_t beam_width,
                              uint32_t max_len,
                              char **out_tokens,
                              double *out_score);

/**
 * Smoothed, clamped log-ratio `log_base((natural + alpha) / (l + alpha))`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MlStatus ml_log_ratio(uint64_t natural,
                           uint64_t l_shaped,
                           double base,
                           double alpha,
                           double clamp,
                           double *out);

/**
 * Spearman's rank correlation and its two-sided p-value.
 *
 * # Safety
 * `x` and `y` must point to `n` readable doubles; outputs must be writable.
 */
enum MlStatus ml_spearman(const double *x, const double *y, size_t n, double *rho, double *p);

/**
 * Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
 *
 * # Safety
 * `a` and `b` must point to `na` and `nb` readable doubles; outputs must be
 * writable.
 */
enum MlStatus ml_ks_two_sample(const double *a,
                               size_t na,
                               const double *b,
                               size_t nb,
                               double *d,
                               double *p);

/**
 * Unit-cost edit distance between two words over the default inventory.
 * Words are forms (`ʃuso`, or space-separated glyphs) optionally joined by
 * `#`.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated strings; `out` must be writable.
 */
enum MlStatus ml_edit_distance(const char *a, const char *b, double *out);

/**
 * The bundled reference lexicon.
 *
 * # Safety
 * `out` must be writable.
 */
enum MlStatus ml_lexicon_default(struct MlLexicon **out);

/**
 * Loads a lexicon file of `base#alternant[<TAB>weight]` lines.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MlStatus ml_lexicon_load(const char *path, struct MlLexicon **out);

/**
 * # Safety
 * `lexicon` must be null or a live lexicon handle.
 */
void ml_lexicon_free(struct MlLexicon *lexicon);

/**
 * Wordlikeness of `word` (e.g. `"ʃut#ʃus"`) with unit edit costs and decay
 * scale `sensitivity`. Writes the raw sum.
 *
 * # Safety
 * `lexicon` must be a live handle, `word` a NUL-terminated string and `out`
 * writable.
 */
enum MlStatus ml_gnm_score(const struct MlLexicon *lexicon,
                           const char *word_text,
                           double sensitivity,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MORPHOME_LAB_H */
