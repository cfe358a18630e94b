/*
 * C interface to the sketchls library: sketch-and-solve least squares and
 * the worst-case / prediction / residual efficiency criteria.
 *
 * Every function returns an sls_status. On failure a thread-local message is
 * available from sls_last_error() until the next call on the same thread.
 * Objects are opaque handles released with the matching *_free function;
 * passing NULL to a *_free function is a no-op.
 */
#ifndef SKETCHLS_SKETCHLS_H
#define SKETCHLS_SKETCHLS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SKETCHLS_BUILDING)
#    define SLS_API __declspec(dllexport)
#  else
#    define SLS_API __declspec(dllimport)
#  endif
#else
#  define SLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sls_status {
  SLS_OK = 0,
  SLS_ERR_INVALID_INPUT = 1,
  SLS_ERR_NUMERIC = 2,
  SLS_ERR_IO = 3,
  SLS_ERR_INTERNAL = 4
} sls_status;

typedef enum sls_sketch_kind {
  SLS_SKETCH_LEVERAGE_RESCALED = 0,
  SLS_SKETCH_LEVERAGE_UNRESCALED = 1,
  SLS_SKETCH_UNIFORM = 2,
  SLS_SKETCH_SHRINKAGE_RESCALED = 3,
  SLS_SKETCH_GAUSSIAN = 4,
  SLS_SKETCH_RADEMACHER = 5,
  SLS_SKETCH_HADAMARD = 6,
  SLS_SKETCH_IDENTITY = 7
} sls_sketch_kind;

typedef enum sls_format { SLS_FORMAT_CSV = 0, SLS_FORMAT_JSON = 1 } sls_format;

typedef struct sls_matrix sls_matrix;
typedef struct sls_sketch sls_sketch;
typedef struct sls_config sls_config;
typedef struct sls_table sls_table;

typedef struct sls_criteria_report {
  double c_wc; /* +inf when the sketch loses rank */
  double c_pe;
  double c_re;
  double bias_sq;
  double pi_frobenius_sq;
  int rank_preserved;
  double alpha_min;
  double beta_nullspace;
  double gamma_frobenius;
} sls_criteria_report;

SLS_API const char* sls_version(void);
SLS_API const char* sls_last_error(void);
SLS_API const char* sls_status_string(int status);

/* Dense matrices, row-major at this boundary. */
SLS_API int sls_matrix_create(size_t rows, size_t cols, const double* row_major,
                              sls_matrix** out);
SLS_API void sls_matrix_free(sls_matrix* m);
SLS_API int sls_matrix_dims(const sls_matrix* m, size_t* rows, size_t* cols);
SLS_API int sls_matrix_copy(const sls_matrix* m, double* row_major, size_t len);

/* Synthetic t_nu(AR(rho)) design; nu may be INFINITY for Gaussian rows. */
SLS_API int sls_generate_design(size_t n, size_t p, double nu, double ar_rho,
                                uint64_t seed, sls_matrix** out);

SLS_API int sls_leverage_scores(const sls_matrix* x, double* out, size_t len);
SLS_API int sls_heavy_hitter_k(const double* lev, size_t len, double mass,
                               size_t* k);

/* Draw a sketch for design x (leverage-based kinds read its leverage). */
SLS_API int sls_sketch_draw(const sls_matrix* x, int kind, double theta,
                            size_t r, uint64_t seed, uint64_t stream,
                            sls_sketch** out);
SLS_API void sls_sketch_free(sls_sketch* s);
SLS_API int sls_sketch_dims(const sls_sketch* s, size_t* r, size_t* n);
SLS_API int sls_sketch_apply(const sls_sketch* s, const sls_matrix* m,
                             sls_matrix** out);

/* beta (length p) = (SX)^+ SY, or X^+ Y when s is NULL. */
SLS_API int sls_solve(const sls_sketch* s, const sls_matrix* x, const double* y,
                      size_t n, double* beta, size_t p, size_t* rank_used);

SLS_API int sls_criteria(const sls_matrix* x, const sls_sketch* s,
                         const double* beta_true, size_t p,
                         sls_criteria_report* out);

/* Experiment configuration (JSON, keys as in the bench config file). */
SLS_API int sls_config_default(sls_config** out);
SLS_API int sls_config_parse(const char* json_text, sls_config** out);
SLS_API int sls_config_load(const char* path, sls_config** out);
SLS_API void sls_config_free(sls_config* c);
/* Applies BENCH_SEED when set. */
SLS_API int sls_config_apply_env(sls_config* c);
SLS_API int sls_config_set_output_dir(sls_config* c, const char* dir);
SLS_API int sls_config_set_mc_mode(sls_config* c, int mc_mode);
SLS_API int sls_config_get_output_dir(const sls_config* c, const char** dir);
/* Serialized config; the string is owned by c and valid until it changes. */
SLS_API int sls_config_to_json(sls_config* c, const char** json_text);

SLS_API int sls_run_experiment(const sls_config* c, unsigned threads,
                               sls_table** out);
SLS_API void sls_table_free(sls_table* t);
SLS_API int sls_table_row_count(const sls_table* t, size_t* rows,
                                size_t* aggregates);
SLS_API int sls_table_write(const sls_table* t, int format, const char* dir);

/* Leverage profiles (sorted scores and cumulative mass) per nu. */
SLS_API int sls_write_leverage(const sls_config* c, int format, const char* dir);

/* Bound satisfaction rates; writes bounds.csv into dir. *violations counts
 * Lemma-2 failures on rank-preserving draws. */
SLS_API int sls_check_bounds(const sls_config* c, unsigned threads,
                             const char* dir, size_t* violations);

#ifdef __cplusplus
}
#endif

#endif
