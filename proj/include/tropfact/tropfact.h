#ifndef TROPFACT_H
#define TROPFACT_H

/* C interface to the tropical matrix factorization library. All functions
 * return a tf_status; on failure tf_last_error() describes the problem for
 * the calling thread. Configs and specs are passed as JSON strings. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TROPFACT_BUILD)
#    define TF_API __declspec(dllexport)
#  else
#    define TF_API __declspec(dllimport)
#  endif
#else
#  define TF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tf_status {
  TF_OK = 0,
  TF_ERR_INVALID_ARGUMENT = 1,
  TF_ERR_DIMENSION = 2,
  TF_ERR_IO = 3,
  TF_ERR_PARSE = 4,
  TF_ERR_CONFIG = 5,
  TF_ERR_INTERNAL = 6
} tf_status;

typedef struct tf_matrix tf_matrix;
typedef struct tf_fit_result tf_fit_result;

typedef enum tf_factor { TF_FACTOR_U = 0, TF_FACTOR_V = 1 } tf_factor;

TF_API const char* tf_version(void);
TF_API const char* tf_last_error(void);
TF_API const char* tf_status_string(tf_status status);

/* 0 trace .. 6 off */
TF_API tf_status tf_set_log_level(int level);

/* values is row-major rows*cols; mask may be NULL (all given), otherwise
 * nonzero marks a given entry. */
TF_API tf_status tf_matrix_create(size_t rows, size_t cols, const double* values,
                                  const uint8_t* mask, tf_matrix** out);
TF_API tf_status tf_matrix_load_csv(const char* path, int has_header, tf_matrix** out);
TF_API tf_status tf_matrix_save_csv(const tf_matrix* m, const char* path);
TF_API tf_status tf_matrix_shape(const tf_matrix* m, size_t* rows, size_t* cols);
/* *given is 0 for a missing entry, whose value is reported as NaN. */
TF_API tf_status tf_matrix_get(const tf_matrix* m, size_t i, size_t j, double* value, int* given);
TF_API void tf_matrix_destroy(tf_matrix* m);

/* method: "STMF", "FastSTMF" or STMF_<family>_<perm>_<selection>[_W].
 * config_json keys: rank, budget_sweeps, budget_seconds, seed, epsilon_rel,
 * acol_q. May be NULL for defaults. */
TF_API tf_status tf_fit(const tf_matrix* data, const char* method, const char* config_json,
                        tf_fit_result** out);
/* Returns a fully given copy of U or V. */
TF_API tf_status tf_fit_result_factor(const tf_fit_result* r, tf_factor which, tf_matrix** out);
TF_API tf_status tf_fit_result_error(const tf_fit_result* r, double* final_error,
                                     double* initial_error, size_t* sweeps, int* converged);
TF_API tf_status tf_fit_result_trajectory_size(const tf_fit_result* r, size_t* count);
TF_API tf_status tf_fit_result_sample(const tf_fit_result* r, size_t index, double* wall_seconds,
                                      double* sweeps, double* error);
/* Writes U.csv, V.csv, trajectory.jsonl and fit.json into dir. */
TF_API tf_status tf_fit_result_save(const tf_fit_result* r, const char* dir);
TF_API void tf_fit_result_destroy(tf_fit_result* r);

/* Pipeline entry points backing the command line tool. */
TF_API tf_status tf_generate(const char* spec_json, const char* out_dir);
TF_API tf_status tf_run_experiment(const char* config_json, const char* out_dir);
/* *written receives the number of files produced (may be NULL). */
TF_API tf_status tf_plot(const char* bundle_dir, const char* out_dir, size_t* written);
TF_API tf_status tf_rank(const char* bundle_dir, const char* out_dir, size_t* written);

#ifdef __cplusplus
}
#endif

#endif
