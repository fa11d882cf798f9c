/*
 * C API of the consistency-oriented pre-ranking laboratory.
 *
 * Every function returns COPR_OK (0) on success or a negative error code;
 * copr_last_error() describes the most recent failure on the calling
 * thread. Handles are opaque and must be released with the matching
 * *_close function. The CLI links exclusively against this surface.
 */
#ifndef COPR_C_API_H
#define COPR_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define COPR_OK 0
#define COPR_E_INVALID (-1)  /* bad argument or precondition violation */
#define COPR_E_CONFIG (-2)   /* malformed or inconsistent configuration */
#define COPR_E_IO (-3)       /* file missing, unreadable, or corrupt */
#define COPR_E_DIGEST (-4)   /* checkpoint belongs to a different world */
#define COPR_E_INTERNAL (-5)

typedef struct copr_config copr_config;
typedef struct copr_world copr_world;
typedef struct copr_model copr_model;

const char* copr_version(void);

/* Message for the last error observed on this thread. Never NULL. */
const char* copr_last_error(void);

/* ------------------------------------------------------------------ */
/* configuration                                                       */

int copr_config_create(copr_config** out);
int copr_config_open(const char* path, copr_config** out);
/* Override or add one key, e.g. ("student.seed", "7"). */
int copr_config_set(copr_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated); fails if absent or too long. */
int copr_config_get(const copr_config* cfg, const char* key, char* buf, size_t buf_size);
void copr_config_close(copr_config* cfg);

/* ------------------------------------------------------------------ */
/* synthetic world                                                     */

typedef struct copr_world_stats {
  uint32_t n_users;
  uint32_t n_ads;
  double mean_bid;
  double mean_true_ctr; /* Monte-Carlo estimate over 10000 triples */
  uint64_t world_digest;
} copr_world_stats;

int copr_world_generate(const copr_config* cfg, copr_world** out);
int copr_world_save(const copr_world* world, const char* path);
int copr_world_open(const char* path, copr_world** out);
int copr_world_stats_get(const copr_world* world, copr_world_stats* out);
void copr_world_close(copr_world* world);

/* ------------------------------------------------------------------ */
/* models                                                              */

typedef struct copr_model_stats {
  uint64_t param_count;
  int has_relaxation;
  char tag[32]; /* "teacher" or the training method name */
} copr_model_stats;

/* Loading verifies the checkpoint against the world's config digest. */
int copr_model_open(const char* path, const copr_world* world, copr_model** out);
int copr_model_save(const copr_model* model, const char* path);
int copr_model_stats_get(const copr_model* model, copr_model_stats* out);
void copr_model_close(copr_model* model);

/* ------------------------------------------------------------------ */
/* pipeline stages                                                     */

/*
 * Bootstrap exploration, teacher training, and ranking-log generation.
 * Writes teacher.ckpt plus the log files into logs_dir. On success
 * *out_model owns the trained teacher and holdout log-losses are filled
 * when the pointers are non-NULL.
 */
int copr_train_teacher(const copr_config* cfg, const copr_world* world, const char* logs_dir,
                       copr_model** out_model, double* holdout_logloss,
                       double* initial_holdout_logloss);

/*
 * Trains one pre-ranking student (base | distill | rankflow | copr |
 * copr-wo-dndcg) from the teacher's logs; writes the checkpoint and the
 * training curve into out_dir.
 */
int copr_train_prerank(const copr_config* cfg, const copr_world* world,
                       const copr_model* teacher, const char* method, const char* logs_dir,
                       const char* out_dir, copr_model** out_model);

/*
 * Evaluates models against the teacher on the configured request set and
 * writes consistency.csv, system.csv, rpc.csv, alignment.csv and
 * impressions_<name>.csv into out_dir. names/models are parallel arrays.
 */
int copr_evaluate(const copr_config* cfg, const copr_world* world, const copr_model* teacher,
                  const copr_model* const* models, const char* const* names, size_t n_models,
                  const char* out_dir);

/*
 * Aggregates one or more evaluate output directories into summary rows
 * (per-method means plus the HR@10/RPM rank correlation). Writes the
 * summary CSV to out_csv_path and, when table_buf is non-NULL, renders a
 * human-readable table into it.
 */
int copr_report(const char* const* eval_dirs, size_t n_dirs, const char* out_csv_path,
                char* table_buf, size_t table_buf_size);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* COPR_C_API_H */
