/* C API for librme: a top-N recommender that jointly factorizes a user-item
 * preference matrix with co-liked, co-disliked, and co-occurring-user SPPMI
 * matrices. Opaque handles, status codes, caller-supplied error buffers. */
#ifndef RME_H
#define RME_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rme_status {
    RME_OK = 0,
    RME_ERR_IO = 1,       /* missing or unwritable files */
    RME_ERR_PARSE = 2,    /* malformed input or config syntax */
    RME_ERR_CONFIG = 3,   /* invalid settings */
    RME_ERR_DATA = 4,     /* empty or inconsistent data */
    RME_ERR_NUMERIC = 5,  /* singular system, non-finite objective */
    RME_ERR_INVALID = 6,  /* bad handle or argument */
    RME_ERR_INTERNAL = 7
} rme_status;

/* Stable lower-case category name ("ok", "io", "parse", ...). */
const char* rme_status_name(rme_status status);

const char* rme_version_string(void);

typedef struct rme_config rme_config;
typedef struct rme_model rme_model;

/* ---- configuration ---------------------------------------------------- */

/* New config holding the documented defaults. Never fails. */
rme_config* rme_config_create(void);
void rme_config_destroy(rme_config* cfg);

rme_status rme_config_load(rme_config* cfg, const char* path,
                           char* err, size_t err_len);

/* Set "section.key" to a string value; unknown keys are rejected. */
rme_status rme_config_set(rme_config* cfg, const char* key, const char* value,
                          char* err, size_t err_len);

/* Copies the value into out (NUL-terminated, truncated if needed). */
rme_status rme_config_get(const rme_config* cfg, const char* key,
                          char* out, size_t out_len);

/* ---- experiment commands ---------------------------------------------- */

rme_status rme_run_prep(const rme_config* cfg, char* err, size_t err_len);
rme_status rme_run_train(const rme_config* cfg, char* err, size_t err_len);
/* model_path may be NULL to use the run's default model file. */
rme_status rme_run_eval(const rme_config* cfg, const char* model_path,
                        char* err, size_t err_len);
/* grid_spec: "model.lambda=0.01,0.1;model.k=8,16" */
rme_status rme_run_grid(const rme_config* cfg, const char* grid_spec,
                        char* err, size_t err_len);
/* Training with per-iteration negative-sample audit dumps. */
rme_status rme_run_negdump(const rme_config* cfg, char* err, size_t err_len);

/* ---- trained models ---------------------------------------------------- */

rme_status rme_model_open(const char* path, rme_model** out,
                          char* err, size_t err_len);
void rme_model_close(rme_model* model);

rme_status rme_model_dims(const rme_model* model, int64_t* n_users,
                          int64_t* n_items, int64_t* k);

/* Recommendation scores for a user by dense index; scores must hold
 * n_items doubles. */
rme_status rme_model_scores(const rme_model* model, int64_t user,
                            double* scores, size_t scores_len);

/* Dense index lookup by raw id; RME_ERR_DATA when unknown. */
rme_status rme_model_user_index(const rme_model* model, const char* raw_id,
                                int64_t* out);
rme_status rme_model_item_index(const rme_model* model, const char* raw_id,
                                int64_t* out);

#ifdef __cplusplus
}
#endif

#endif /* RME_H */
