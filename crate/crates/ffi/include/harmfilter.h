#ifndef HARMFILTER_H
#define HARMFILTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of a C API call.
 */
typedef enum HfStatus {
  HF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  HF_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  HF_STATUS_INVALID_UTF8 = 2,
  /**
   * A numeric argument was out of range.
   */
  HF_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A file could not be read or written.
   */
  HF_STATUS_IO_ERROR = 4,
  /**
   * A model file could not be parsed.
   */
  HF_STATUS_PARSE_ERROR = 5,
  /**
   * Training failed (empty corpus, degenerate counts, ...).
   */
  HF_STATUS_TRAIN_ERROR = 6,
} HfStatus;

/**
 * Opaque model handle.
 */
typedef struct HfModel HfModel;

/**
 * Score of one piece of text.
 */
typedef struct HfScore {
  /**
   * Sum of per-token log10 probabilities.
   */
  double log10_prob;
  /**
   * Number of scored tokens (the end-of-document marker included).
   */
  uint64_t tokens;
  /**
   * 10^(-log10_prob / tokens).
   */
  double perplexity;
} HfScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Never null; empty
 * before the first failure. The pointer is invalidated by the next failing
 * call on the same thread.
 */
const char *hf_last_error_message(void);

/**
 * Load an ARPA model file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out_model` must point to
 * writable storage for one pointer. On `Ok` the caller owns the handle and
 * must release it with [`hf_model_free`].
 */
enum HfStatus hf_model_load_arpa(const char *path, struct HfModel **out_model);

/**
 * Train a model on a JSONLines corpus (objects with a "content" field),
 * tokenized with the fixed language-model tokenizer.
 *
 * # Safety
 * `input_jsonl` must be a valid NUL-terminated string; `out_model` must
 * point to writable storage for one pointer. On `Ok` the caller owns the
 * handle.
 */
enum HfStatus hf_model_train(const char *input_jsonl,
                             uint32_t order,
                             bool fallback_discounts,
                             struct HfModel **out_model);

/**
 * Write the model to `path` in ARPA format.
 *
 * # Safety
 * `model` must be a live handle from this library; `path` a valid
 * NUL-terminated string.
 */
enum HfStatus hf_model_save_arpa(const struct HfModel *model, const char *path);

/**
 * The model's n-gram order, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle from this library.
 */
uint32_t hf_model_order(const struct HfModel *model);

/**
 * Vocabulary size including the sentinels, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle from this library.
 */
uint64_t hf_model_vocab_size(const struct HfModel *model);

/**
 * Score a UTF-8 text: log10 probability, token count, perplexity.
 *
 * # Safety
 * `model` must be a live handle; `text` a valid NUL-terminated string;
 * `out_score` writable storage for one [`HfScore`].
 */
enum HfStatus hf_score_text(const struct HfModel *model,
                            const char *text,
                            struct HfScore *out_score);

/**
 * Classify a UTF-8 text: harmful iff its perplexity is at or below `theta`.
 *
 * # Safety
 * `model` must be a live handle; `text` a valid NUL-terminated string;
 * `out_harmful` writable storage for one bool.
 */
enum HfStatus hf_classify_text(const struct HfModel *model,
                               const char *text,
                               double theta,
                               bool *out_harmful);

/**
 * Release a model handle. Null is a no-op.
 *
 * # Safety
 * `model` must be null or a handle obtained from this library that has not
 * been freed yet.
 */
void hf_model_free(struct HfModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARMFILTER_H */
