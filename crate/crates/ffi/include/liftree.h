#ifndef LIFTREE_H
#define LIFTREE_H

/* This file is generated by cbindgen from liftree-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a liftree call.
typedef enum LiftreeStatus {
  LIFTREE_STATUS_OK = 0,
  LIFTREE_STATUS_NULL_POINTER = 1,
  LIFTREE_STATUS_INVALID_ARGUMENT = 2,
  LIFTREE_STATUS_IO = 3,
  LIFTREE_STATUS_PARSE = 4,
  LIFTREE_STATUS_DOMAIN = 5,
  LIFTREE_STATUS_UTF8 = 6,
  LIFTREE_STATUS_INTERNAL = 7,
} LiftreeStatus;

// Opaque record table.
typedef struct LiftreeDataset LiftreeDataset;

// Opaque decision tree.
typedef struct LiftreeTree LiftreeTree;

// One mailing decision.
typedef struct LiftreeDecision {
  // 1 to mail, 0 not to.
  int32_t mail;
  // Expected lift in profit.
  double elp;
  // Subscription probability when mailed.
  double p1;
  // Subscription probability when not mailed.
  double p0;
} LiftreeDecision;

// Matched-record evaluation of a policy on a test set.
typedef struct LiftreeEvaluation {
  uint64_t matched_mail;
  uint64_t matched_nomail;
  uint64_t skipped;
  double total_revenue;
  double per_person_revenue;
  double baseline_per_person;
  double improvement;
} LiftreeEvaluation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *liftree_version(void);

// Message describing the calling thread's most recent failure. The pointer
// stays valid until the next failing liftree call on this thread.
const char *liftree_last_error(void);

// Loads a header-first CSV into a new dataset handle.
//
// `treatment_column` / `outcome_column` default to "M" / "S" when NULL;
// the four value labels default to "0" and "1". On success writes the new
// handle to `out`.
//
// # Safety
// String arguments must be NUL-terminated or NULL; `out` must be a valid
// pointer to a handle slot.
enum LiftreeStatus liftree_dataset_load_csv(const char *path,
                                            const char *treatment_column,
                                            const char *outcome_column,
                                            const char *not_mailed_label,
                                            const char *mailed_label,
                                            const char *not_subscribed_label,
                                            const char *subscribed_label,
                                            struct LiftreeDataset **out);

// Draws a synthetic population from a generator spec given as JSON text.
//
// # Safety
// `config_json` must be NUL-terminated; `out` must be valid.
enum LiftreeStatus liftree_dataset_generate(const char *config_json, struct LiftreeDataset **out);

// Number of records in the dataset; 0 on NULL.
//
// # Safety
// `dataset` must be a live handle or NULL.
size_t liftree_dataset_len(const struct LiftreeDataset *dataset);

// Splits a dataset into train and test handles, deterministic in `seed`.
//
// # Safety
// `dataset` must be a live handle; both out pointers must be valid.
enum LiftreeStatus liftree_dataset_split(const struct LiftreeDataset *dataset,
                                         double train_fraction,
                                         uint64_t seed,
                                         struct LiftreeDataset **train_out,
                                         struct LiftreeDataset **test_out);

// Frees a dataset handle. NULL is a no-op.
//
// # Safety
// `dataset` must have come from this library and not be freed twice.
void liftree_dataset_free(struct LiftreeDataset *dataset);

// Learns a tree from `train`. `mode` is "normal", "force", or
// "split_first" (NULL means "force"); `kappa` is the structure-prior base.
//
// # Safety
// `train` must be a live handle; `out` must be valid.
enum LiftreeStatus liftree_train(const struct LiftreeDataset *train,
                                 const char *mode,
                                 double kappa,
                                 struct LiftreeTree **out);

// Saves a tree to its JSON model format.
//
// # Safety
// `tree` must be a live handle; `path` must be NUL-terminated.
enum LiftreeStatus liftree_tree_save(const struct LiftreeTree *tree, const char *path);

// Loads a tree from a JSON model file. `schema_source` supplies the schema
// the model must match (typically the dataset it will be applied to).
//
// # Safety
// `schema_source` must be a live handle; `out` must be valid.
enum LiftreeStatus liftree_tree_load(const char *path,
                                     const struct LiftreeDataset *schema_source,
                                     struct LiftreeTree **out);

// Number of leaves in the tree; 0 on NULL.
//
// # Safety
// `tree` must be a live handle or NULL.
size_t liftree_tree_leaf_count(const struct LiftreeTree *tree);

// Decides whether to mail a person with covariate value indexes `x`
// (length `x_len`, one entry per predictor in schema order), under mailing
// cost `c` and revenues `rs`/`ru`.
//
// # Safety
// `tree` must be a live handle; `x` must point to `x_len` readable values;
// `out` must be valid.
enum LiftreeStatus liftree_decide(const struct LiftreeTree *tree,
                                  const uint16_t *x,
                                  size_t x_len,
                                  double c,
                                  double rs,
                                  double ru,
                                  struct LiftreeDecision *out);

// Replays the tree's policy against a test set using the matched-record
// protocol and fills `out` with the revenue report.
//
// # Safety
// `tree` and `test` must be live handles; `out` must be valid.
enum LiftreeStatus liftree_evaluate(const struct LiftreeTree *tree,
                                    const struct LiftreeDataset *test,
                                    double c,
                                    double rs,
                                    double ru,
                                    struct LiftreeEvaluation *out);

// Frees a tree handle. NULL is a no-op.
//
// # Safety
// `tree` must have come from this library and not be freed twice.
void liftree_tree_free(struct LiftreeTree *tree);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIFTREE_H */
