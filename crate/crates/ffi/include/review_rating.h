/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef REVIEW_RATING_H
#define REVIEW_RATING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RrStatus {
  RR_STATUS_OK = 0,
  RR_STATUS_NULL_POINTER = 1,
  RR_STATUS_INVALID_UTF8 = 2,
  RR_STATUS_INVALID_ARGUMENT = 3,
  RR_STATUS_IO = 4,
  RR_STATUS_DATA = 5,
  RR_STATUS_DIMENSION_MISMATCH = 6,
  RR_STATUS_BUFFER_TOO_SMALL = 7,
  RR_STATUS_INTERNAL = 8,
  RR_STATUS_PANIC = 9,
} RrStatus;

// Feature schemes.
typedef enum RrScheme {
  RR_SCHEME_BL = 0,
  RR_SCHEME_W2V = 1,
  RR_SCHEME_W2V_APE = 2,
  RR_SCHEME_W2V_PAPE = 3,
} RrScheme;

typedef struct RrEmbeddings RrEmbeddings;

typedef struct RrLexicon RrLexicon;

typedef struct RrModel RrModel;

// Phrases extracted from one text. Strings stay valid until the list is
// freed.
typedef struct RrPhraseList RrPhraseList;

typedef struct RrTagger RrTagger;

// One aspect phrase. `polarity` is 1 for positive, -1 for negative.
typedef struct RrPhrase {
  const char *sentiment_word;
  const char *target_word;
  int polarity;
  size_t segment_index;
} RrPhrase;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null. Owned by the
// library; valid until the next failing call on the same thread.
const char *rr_last_error(void);

// Library version as a static string.
const char *rr_version(void);

// Mean absolute error over `n` star ratings (each 1 to 5).
//
// # Safety
// `preds` and `truths` must point to `n` readable bytes; `out` must be
// writable.
enum RrStatus rr_mae(const uint8_t *preds, const uint8_t *truths, size_t n, double *out);

// Root mean squared error over `n` star ratings (each 1 to 5).
//
// # Safety
// As for [`rr_mae`].
enum RrStatus rr_rmse(const uint8_t *preds, const uint8_t *truths, size_t n, double *out);

// The opinion lexicon shipped with the library.
//
// # Safety
// `out` must be writable.
enum RrStatus rr_lexicon_bundled(struct RrLexicon **out);

// Loads a lexicon from positive and negative word-list files.
//
// # Safety
// Paths must be NUL-terminated strings; `out` must be writable.
enum RrStatus rr_lexicon_load(const char *positive_path,
                              const char *negative_path,
                              struct RrLexicon **out);

// Writes 1 (positive), -1 (negative) or 0 (not in the lexicon). The word
// is lowercased before lookup.
//
// # Safety
// `lexicon` must be a live handle, `word` a NUL-terminated string and
// `out` writable.
enum RrStatus rr_lexicon_polarity(const struct RrLexicon *lexicon, const char *word, int *out);

// # Safety
// `lexicon` must be null or a live handle; it is invalid afterwards.
void rr_lexicon_free(struct RrLexicon *lexicon);

// The part-of-speech tagger shipped with the library.
//
// # Safety
// `out` must be writable.
enum RrStatus rr_tagger_bundled(struct RrTagger **out);

// Loads a tagger model file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RrStatus rr_tagger_load(const char *path, struct RrTagger **out);

// # Safety
// `tagger` must be null or a live handle; it is invalid afterwards.
void rr_tagger_free(struct RrTagger *tagger);

// Extracts the aspect phrases of `text`. `max_distance` of 0 means no
// distance limit.
//
// # Safety
// Handles must be live, `text` NUL-terminated, `out` writable.
enum RrStatus rr_extract_phrases(const struct RrLexicon *lexicon,
                                 const struct RrTagger *tagger,
                                 const char *text_ptr,
                                 size_t max_distance,
                                 struct RrPhraseList **out);

// Number of phrases in a list; 0 for a null list.
//
// # Safety
// `list` must be null or a live handle.
size_t rr_phrase_list_len(const struct RrPhraseList *list);

// Copies phrase `index` into `out`. The strings it points to belong to
// the list.
//
// # Safety
// `list` must be a live handle and `out` writable.
enum RrStatus rr_phrase_list_get(const struct RrPhraseList *list,
                                 size_t index,
                                 struct RrPhrase *out);

// # Safety
// `list` must be null or a live handle; it and its strings are invalid
// afterwards.
void rr_phrase_list_free(struct RrPhraseList *list);

// Loads word vectors in the text format (`<count> <dim>` header).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RrStatus rr_embeddings_load(const char *path, struct RrEmbeddings **out);

// Vector dimension; 0 for a null handle.
//
// # Safety
// `embeddings` must be null or a live handle.
size_t rr_embeddings_dim(const struct RrEmbeddings *embeddings);

// Vocabulary size; 0 for a null handle.
//
// # Safety
// `embeddings` must be null or a live handle.
size_t rr_embeddings_len(const struct RrEmbeddings *embeddings);

// # Safety
// `embeddings` must be null or a live handle; it is invalid afterwards.
void rr_embeddings_free(struct RrEmbeddings *embeddings);

// Embedding features of `text` under `scheme` (not `Bl`): D, 2D or 3D
// values. The required length is always written to `written`; when
// `capacity` is too small nothing else is written and the call returns
// `BufferTooSmall`.
//
// # Safety
// Handles must be live, `text` NUL-terminated, `out` writable for
// `capacity` doubles (or null when `capacity` is 0) and `written` writable.
enum RrStatus rr_featurize(const struct RrEmbeddings *embeddings,
                           const struct RrLexicon *lexicon,
                           const struct RrTagger *tagger,
                           const char *text_ptr,
                           enum RrScheme scheme,
                           double *out,
                           size_t capacity,
                           size_t *written);

// Loads a saved model and, for embedding schemes, the vectors it names.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RrStatus rr_model_load(const char *path, struct RrModel **out);

// Feature scheme of a model.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RrStatus rr_model_scheme(const struct RrModel *model, enum RrScheme *out);

// Input dimension of a model; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t rr_model_feature_dim(const struct RrModel *model);

// Star rating (1 to 5) for a prepared feature vector of the model's
// dimension.
//
// # Safety
// `model` must be a live handle, `features` readable for `n` doubles and
// `out` writable.
enum RrStatus rr_model_predict_features(const struct RrModel *model,
                                        const double *features,
                                        size_t n,
                                        uint8_t *out);

// Star rating (1 to 5) for raw review text. The lexicon and tagger are
// only read by phrase schemes and may be null otherwise.
//
// # Safety
// `model` must be a live handle, other handles live or null, `text`
// NUL-terminated and `out` writable.
enum RrStatus rr_model_predict_text(const struct RrModel *model,
                                    const struct RrLexicon *lexicon,
                                    const struct RrTagger *tagger,
                                    const char *text_ptr,
                                    uint8_t *out);

// # Safety
// `model` must be null or a live handle; it is invalid afterwards.
void rr_model_free(struct RrModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVIEW_RATING_H */
