/* C interface to the uqsub solver library.
 *
 * Every function returns a uqsub_status. On failure the message (and, for
 * configuration errors, the offending field) of the most recent error on the
 * calling thread is available from uqsub_last_error() and
 * uqsub_last_error_field() until the next failing call on that thread.
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function, which accepts NULL. */
#ifndef UQSUB_H
#define UQSUB_H

#include <stddef.h>
#include <stdint.h>

#if defined(UQSUB_BUILDING)
#define UQSUB_API __attribute__((visibility("default")))
#else
#define UQSUB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uqsub_status {
  UQSUB_OK = 0,
  UQSUB_ERR_INVALID_ARGUMENT = 1, /* null pointer, short buffer */
  UQSUB_ERR_CONFIG = 2,           /* malformed config or input file */
  UQSUB_ERR_IO = 3,
  UQSUB_ERR_DOMAIN = 4,           /* value outside its documented range */
  UQSUB_ERR_CAPACITY = 5,
  UQSUB_ERR_STRUCTURE = 6,        /* incompatible shapes or objects */
  UQSUB_ERR_RUNTIME = 7
} uqsub_status;

UQSUB_API const char* uqsub_version(void);
UQSUB_API const char* uqsub_status_name(uqsub_status status);
UQSUB_API const char* uqsub_last_error(void);
/* Empty unless the last error was UQSUB_ERR_CONFIG with a known field. */
UQSUB_API const char* uqsub_last_error_field(void);

/* Strings returned through char** out-parameters. */
UQSUB_API void uqsub_string_free(char* s);

/* ---- experiment configuration ---------------------------------------- */

typedef struct uqsub_config uqsub_config;

UQSUB_API uqsub_status uqsub_config_load(const char* path, uqsub_config** out);
UQSUB_API uqsub_status uqsub_config_set_seed(uqsub_config* cfg, uint64_t seed);
UQSUB_API uqsub_status uqsub_config_set_output_dir(uqsub_config* cfg,
                                                   const char* dir);
UQSUB_API uqsub_status uqsub_config_output_dir(const uqsub_config* cfg,
                                               char** out);
UQSUB_API void uqsub_config_free(uqsub_config* cfg);

typedef struct uqsub_run_summary {
  double initial_error_pi;
  double final_error_pi;
  size_t sg_calls;
  size_t rsg_calls;
  size_t final_terms;
} uqsub_run_summary;

/* Solves, computes statistics and writes trace.csv, expansion.json,
 * stats.json and summary.json into the configured output directory.
 * `summary` may be NULL. */
UQSUB_API uqsub_status uqsub_run_experiment(const uqsub_config* cfg,
                                            uqsub_run_summary* summary);

/* Statistics of a saved expansion, written to <output dir>/stats.json. */
UQSUB_API uqsub_status uqsub_run_statistics(const uqsub_config* cfg,
                                            const char* expansion_path);

/* ---- expansions ------------------------------------------------------- */

typedef struct uqsub_expansion uqsub_expansion;

UQSUB_API uqsub_status uqsub_expansion_load(const char* path,
                                            uqsub_expansion** out);
UQSUB_API uqsub_status uqsub_expansion_save(const uqsub_expansion* e,
                                            const char* path);
UQSUB_API uqsub_status uqsub_expansion_shape(const uqsub_expansion* e,
                                             size_t* terms, size_t* outputs);
/* Writes the `outputs` components of x(theta) into out[0..len). */
UQSUB_API uqsub_status uqsub_expansion_evaluate(const uqsub_expansion* e,
                                                double theta, double* out,
                                                size_t len);
UQSUB_API void uqsub_expansion_free(uqsub_expansion* e);

/* ---- traces ----------------------------------------------------------- */

typedef struct uqsub_trace uqsub_trace;

typedef struct uqsub_trace_row {
  size_t call_index;
  size_t outer_i;
  size_t stage_k;
  size_t m;
  double eta;
  double fn_error_pi;
  double fn_error_pi_sq;
  double elapsed_ms;
  uint64_t coeff_hash;
} uqsub_trace_row;

UQSUB_API uqsub_status uqsub_trace_load(const char* path, uqsub_trace** out);
UQSUB_API uqsub_status uqsub_trace_size(const uqsub_trace* t, size_t* rows);
UQSUB_API uqsub_status uqsub_trace_row_at(const uqsub_trace* t, size_t i,
                                          uqsub_trace_row* out);
/* Error curve as CSV text; release with uqsub_string_free. */
UQSUB_API uqsub_status uqsub_trace_error_curve(const uqsub_trace* t,
                                               char** csv);
/* Outer loops showing a cusp, number of outer loops, and the least-squares
 * slope of ln(end-of-loop error) per outer loop. Any pointer may be NULL. */
UQSUB_API uqsub_status uqsub_trace_cusps(const uqsub_trace* t, size_t* cusps,
                                         size_t* loops, double* log_slope);
UQSUB_API void uqsub_trace_free(uqsub_trace* t);

/* ---- cut graphs ------------------------------------------------------- */

typedef struct uqsub_graph uqsub_graph;

/* Edge weights are validated as nonnegative over [lo, hi]. */
UQSUB_API uqsub_status uqsub_graph_load(const char* path, double lo, double hi,
                                        uqsub_graph** out);
UQSUB_API uqsub_status uqsub_graph_figure1(double lo, double hi,
                                           uqsub_graph** out);
UQSUB_API uqsub_status uqsub_graph_ground_size(const uqsub_graph* g,
                                               size_t* n);
/* Cut value of the set given as ground indices (any order, no repeats). */
UQSUB_API uqsub_status uqsub_graph_cut_value(const uqsub_graph* g,
                                             const size_t* members,
                                             size_t count, double theta,
                                             double* value);
/* Exhaustive minimum; members[] needs room for the ground size. */
UQSUB_API uqsub_status uqsub_graph_brute_force_min(const uqsub_graph* g,
                                                   double theta, double* value,
                                                   size_t* members,
                                                   size_t capacity,
                                                   size_t* count);
/* Lovasz extension at x in [0,1]^n; `subgradient` (length n) may be NULL. */
UQSUB_API uqsub_status uqsub_graph_lovasz(const uqsub_graph* g, const double* x,
                                          size_t n, double theta, double* value,
                                          double* subgradient);
UQSUB_API void uqsub_graph_free(uqsub_graph* g);

#ifdef __cplusplus
}
#endif

#endif /* UQSUB_H */
