#ifndef BIONER_H
#define BIONER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BionerStatus {
  BIONER_STATUS_OK = 0,
  BIONER_STATUS_NULL_POINTER = 1,
  BIONER_STATUS_INVALID_UTF8 = 2,
  BIONER_STATUS_INVALID_ARGUMENT = 3,
  BIONER_STATUS_PARSE = 4,
  BIONER_STATUS_IO = 5,
  BIONER_STATUS_PANIC = 6,
} BionerStatus;

/**
 * Tagging schema of a label space.
 */
typedef enum BionerSchema {
  BIONER_SCHEMA_BIO = 0,
  BIONER_SCHEMA_IO = 1,
} BionerSchema;

/**
 * Trained dense tagging head with its featurizer.
 */
typedef struct BionerHead BionerHead;

/**
 * Synonym index used for dictionary tagging.
 */
typedef struct BionerIndex BionerIndex;

/**
 * Ordered output labels for a set of entity classes.
 */
typedef struct BionerLabelSpace BionerLabelSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bioner_version(void);

/**
 * Message of the last failed call on this thread, or NULL if none.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *bioner_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer obtained from this library that has not
 * been freed yet.
 */
void bioner_string_free(char *s);

/**
 * Builds a label space from comma-separated class names.
 *
 * # Safety
 * `classes` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BionerStatus bioner_label_space_new(const char *classes,
                                         enum BionerSchema schema,
                                         struct BionerLabelSpace **out);

/**
 * Number of labels in the space, or 0 for NULL.
 *
 * # Safety
 * `space` must be NULL or a live handle from [`bioner_label_space_new`].
 */
size_t bioner_label_space_len(const struct BionerLabelSpace *space);

/**
 * Writes the labels of the space as a JSON array of strings.
 *
 * # Safety
 * `space` must be a live handle and `out` a valid pointer.
 */
enum BionerStatus bioner_label_space_labels_json(const struct BionerLabelSpace *space, char **out);

/**
 * # Safety
 * `space` must be NULL or a handle not yet freed.
 */
void bioner_label_space_free(struct BionerLabelSpace *space);

/**
 * Tokenizes `text` into a JSON array of `{text, span: [start, end]}` tokens.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BionerStatus bioner_tokenize_json(const char *text, char **out);

/**
 * Loads a synonym index from a JSON file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BionerStatus bioner_index_load(const char *path, struct BionerIndex **out);

/**
 * Builds a synonym index from its JSON serialization.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BionerStatus bioner_index_from_json(const char *json, struct BionerIndex **out);

/**
 * Number of distinct normalized keys, or 0 for NULL.
 *
 * # Safety
 * `index` must be NULL or a live handle.
 */
size_t bioner_index_len(const struct BionerIndex *index);

/**
 * # Safety
 * `index` must be NULL or a handle not yet freed.
 */
void bioner_index_free(struct BionerIndex *index);

/**
 * Tags `text` by dictionary lookup; writes a JSON array of entities.
 *
 * # Safety
 * `index` must be a live handle, `text` a valid NUL-terminated string and
 * `out` a valid pointer.
 */
enum BionerStatus bioner_dictionary_tag_json(const struct BionerIndex *index,
                                             const char *text,
                                             char **out);

/**
 * Decodes one probability record `{"tokens": [...], "probs": [[...], ...]}`
 * into a JSON array of entities.
 *
 * Token offsets assume the tokens are joined by single spaces.
 *
 * # Safety
 * `space` must be a live handle, `record` a valid NUL-terminated string and
 * `out` a valid pointer.
 */
enum BionerStatus bioner_decode_json(const struct BionerLabelSpace *space,
                                     const char *record,
                                     double threshold,
                                     char **out);

/**
 * Scores probability records against gold CoNLL text.
 *
 * `pred_jsonl` holds one probability record per line, aligned with the
 * gold sentences. The macro F1 is written to `macro_f1`; if `report` is not
 * NULL the full per-class report is written there as JSON.
 *
 * # Safety
 * `space` must be a live handle, the strings valid and NUL-terminated, and
 * `macro_f1` a valid pointer. `report` may be NULL.
 */
enum BionerStatus bioner_evaluate(const struct BionerLabelSpace *space,
                                  const char *gold_conll,
                                  const char *pred_jsonl,
                                  double threshold,
                                  double *macro_f1,
                                  char **report);

/**
 * Loads a trained head from its JSON file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BionerStatus bioner_head_load(const char *path, struct BionerHead **out);

/**
 * Tags `text` with the head; writes a JSON array of entities.
 *
 * # Safety
 * `head` must be a live handle, `text` a valid NUL-terminated string and
 * `out` a valid pointer.
 */
enum BionerStatus bioner_head_predict_json(const struct BionerHead *head,
                                           const char *text,
                                           char **out);

/**
 * # Safety
 * `head` must be NULL or a handle not yet freed.
 */
void bioner_head_free(struct BionerHead *head);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIONER_H */
