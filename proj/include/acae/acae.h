/*
 * acae — affine-combining autoencoders for multi-skeleton 3D keypoints.
 *
 * C API over the C++ core. All entry points return acae_status; on failure a
 * thread-local message is available via acae_last_error(). Every acae_*_free
 * accepts NULL. Handles are immutable after creation and safe to share across
 * threads; creation functions are thread-safe. ACAE_THREADS caps internal
 * worker threads.
 */
#ifndef ACAE_H
#define ACAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ACAE_API __declspec(dllexport)
#else
#define ACAE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum acae_status {
  ACAE_OK = 0,
  ACAE_ERR_INVALID_ARGUMENT,
  ACAE_ERR_CONFIG_INVALID,
  ACAE_ERR_IO,
  ACAE_ERR_PARSE,
  ACAE_ERR_DEPTH_TOO_SMALL,
  ACAE_ERR_PARTITION_MISMATCH,
  ACAE_ERR_ASYMMETRIC_FORMAT,
  ACAE_ERR_TOO_FEW_LATENTS,
  ACAE_ERR_DEGENERATE_ROW,
  ACAE_ERR_INCOMPLETE_INPUT,
  ACAE_ERR_EMPTY_CORPUS,
  ACAE_ERR_SHAPE_MISMATCH,
  ACAE_ERR_UNKNOWN_TAG,
  ACAE_ERR_EMPTY_LABEL_SET,
  ACAE_ERR_SINGULAR_SYSTEM,
  ACAE_ERR_NO_VALID_JOINTS,
  ACAE_ERR_DEGENERATE_CONFIGURATION,
  ACAE_ERR_INVALID_ROOT,
  ACAE_ERR_INTERNAL
} acae_status;

ACAE_API const char* acae_version(void);
ACAE_API const char* acae_status_name(acae_status status);
/* Message for the most recent failure on this thread; empty if none. */
ACAE_API const char* acae_last_error(void);

/* ---- joint catalogs ---------------------------------------------------- */

typedef struct acae_catalog acae_catalog;

/* "mini", "demo1", "demo2" or "demo3". */
ACAE_API acae_status acae_catalog_builtin(const char* set_name, acae_catalog** out);
/* Each file is one skeleton format: {"name":..., "joints":[{"name","side","is_head"}]}. */
ACAE_API acae_status acae_catalog_from_files(const char* const* paths, int32_t count,
                                             acae_catalog** out);
/* Format-list sidecar: {"schema":"acae-formats-v1","formats":[...]}. */
ACAE_API acae_status acae_catalog_save_meta(const acae_catalog* catalog, const char* path);
ACAE_API acae_status acae_catalog_from_meta(const char* path, acae_catalog** out);
ACAE_API int32_t acae_catalog_joint_count(const acae_catalog* catalog);
ACAE_API int32_t acae_catalog_default_root(const acae_catalog* catalog);
/* Writes 16 hex characters plus NUL; buflen must be >= 17. */
ACAE_API acae_status acae_catalog_hash_hex(const acae_catalog* catalog, char* buf, size_t buflen);
ACAE_API void acae_catalog_free(acae_catalog* catalog);

/* ---- corpora ----------------------------------------------------------- */

typedef struct acae_corpus acae_corpus;
typedef struct acae_mixing acae_mixing;

typedef struct acae_synth_params {
  int32_t true_latent_count;
  int32_t example_count;
  double noise_sigma;  /* mm */
  uint64_t seed;
  double camera_distance_min;  /* mm */
  double camera_distance_max;
  double template_spread;  /* mm */
  double jitter_sigma;     /* mm */
  double focal_px;
  double principal_px;
  const char* tags_csv;  /* comma-separated source tags; NULL = "synth" */
} acae_synth_params;

ACAE_API void acae_synth_params_init(acae_synth_params* params);
ACAE_API acae_status acae_corpus_synth(const acae_catalog* catalog,
                                       const acae_synth_params* params, acae_corpus** out,
                                       acae_mixing** mixing_out /* nullable */);
/* Reads .bin as packed binary, anything else as JSONL. */
ACAE_API acae_status acae_corpus_load(const char* path, const acae_catalog* catalog,
                                      acae_corpus** out);
ACAE_API acae_status acae_corpus_save(const acae_corpus* corpus, const char* path);
ACAE_API int64_t acae_corpus_size(const acae_corpus* corpus);
/* policy_json: {"tag": ["format", ...], ...} */
ACAE_API acae_status acae_corpus_mask(const acae_corpus* corpus, const char* policy_json,
                                      acae_corpus** out);
ACAE_API acae_status acae_corpus_filter_redundant(const acae_corpus* corpus, double threshold_mm,
                                                  acae_corpus** out);
ACAE_API void acae_corpus_free(acae_corpus* corpus);

ACAE_API acae_status acae_mixing_save(const acae_mixing* mixing, const char* path);
ACAE_API void acae_mixing_free(acae_mixing* mixing);

/* ---- autoencoder fitting ------------------------------------------------ */

typedef struct acae_weights acae_weights;
typedef struct acae_trainlog acae_trainlog;

typedef struct acae_fit_params {
  int32_t latent_count;
  double learning_rate;
  double lr_final;  /* >0: exponential decay target; 0: flat rate */
  int32_t steps;
  int32_t batch_size;
  double lambda_sparse;
  int32_t use_projected_loss;  /* 0/1 */
  int32_t chirality;           /* 0/1 */
  int32_t head_weighting;      /* 0/1 */
  uint64_t seed;
  double val_fraction;
  int32_t log_every;
} acae_fit_params;

ACAE_API void acae_fit_params_init(acae_fit_params* params);
ACAE_API acae_status acae_fit(const acae_corpus* corpus, const acae_fit_params* params,
                              acae_weights** out, acae_trainlog** log_out /* nullable */);

ACAE_API acae_status acae_trainlog_save_csv(const acae_trainlog* log, const char* path);
ACAE_API acae_status acae_trainlog_final_val(const acae_trainlog* log, double* reconstr_mm,
                                             double* reconstr_px);
ACAE_API void acae_trainlog_free(acae_trainlog* log);

/* Checkpoints round-trip bit-exactly. */
ACAE_API acae_status acae_weights_save(const acae_weights* weights, const char* path);
ACAE_API acae_status acae_weights_load(const char* path, acae_weights** out);
ACAE_API int32_t acae_weights_joint_count(const acae_weights* weights);
ACAE_API int32_t acae_weights_latent_count(const acae_weights* weights);
ACAE_API int32_t acae_weights_is_chiral(const acae_weights* weights);
ACAE_API void acae_weights_free(acae_weights* weights);

/* One fit per latent count on a seeded 90/10 split; writes the held-out
 * projected error (mm) per entry into errors_out. */
ACAE_API acae_status acae_elbow(const acae_corpus* corpus, const acae_fit_params* params,
                                const int32_t* l_values, int32_t count, double* errors_out);

/* ---- consistency fine-tuning demo --------------------------------------- */

typedef struct acae_demo_params {
  double lambda_cons;
  double lambda_teach;
  double lambda_proj;
  double lambda_abs;
  double abs_depth_cap;  /* mm */
  int32_t reference_format;
  double learning_rate;
  double lr_final;
  int32_t base_steps;
  int32_t branch_steps;
  int32_t batch_size;
  uint64_t seed;
  double heldout_fraction;
} acae_demo_params;

typedef struct acae_variant_metrics {
  char variant[16];
  double lambda_cons;
  double lambda_teach;
  double mpjpe;
  double pmpjpe;
  double pck100;
  double cps200;
  double inconsistency_mm;
} acae_variant_metrics;

ACAE_API void acae_demo_params_init(acae_demo_params* params);
/* variants_csv: subset of "separate,regularized,latent,hybrid"; NULL = all. */
ACAE_API acae_status acae_consistency_demo(const acae_corpus* complete, const char* policy_json,
                                           const acae_weights* frozen,
                                           const acae_demo_params* params,
                                           const char* variants_csv, acae_variant_metrics* out,
                                           int32_t capacity, int32_t* count_out);

/* ---- evaluation ---------------------------------------------------------- */

typedef struct acae_report acae_report;

/* Compares two corpus files pose by pose (same catalog, same length). */
ACAE_API acae_status acae_eval_files(const char* pred_path, const char* gt_path,
                                     const acae_catalog* catalog, int32_t root_index,
                                     acae_report** out);
ACAE_API acae_status acae_report_summary(const acae_report* report, double* mpjpe, double* pmpjpe,
                                         double* pck100, double* cps200);
ACAE_API acae_status acae_report_save_json(const acae_report* report, const char* path);
ACAE_API acae_status acae_report_save_csv(const acae_report* report, const char* path);
ACAE_API void acae_report_free(acae_report* report);

#ifdef __cplusplus
}
#endif

#endif /* ACAE_H */
