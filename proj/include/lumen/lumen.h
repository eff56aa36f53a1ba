/*
 * lumen: nighttime-light pollution assessment for residential areas.
 *
 * C interface over the analysis core. Every function returns a lumen_status;
 * on failure a thread-local message is available from lumen_last_error().
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with lumen_string_free().
 */
#ifndef LUMEN_LUMEN_H
#define LUMEN_LUMEN_H

#include <stddef.h>
#include <stdint.h>

#if defined(LUMEN_BUILDING_LIBRARY)
#define LUMEN_API __attribute__((visibility("default")))
#else
#define LUMEN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lumen_status {
  LUMEN_OK = 0,
  LUMEN_E_INVALID_ARGUMENT = 1,
  LUMEN_E_PARSE = 2,
  LUMEN_E_DOMAIN = 3,
  LUMEN_E_OUT_OF_BOUNDS = 4,
  LUMEN_E_NOT_FOUND = 5,
  LUMEN_E_IO = 6,
  LUMEN_E_STALE = 7,
  LUMEN_E_LOCKED = 8,
  LUMEN_E_NUMERIC = 9,
  LUMEN_E_INTERNAL = 10
} lumen_status;

typedef struct lumen_workspace lumen_workspace;
typedef struct lumen_service lumen_service;

LUMEN_API const char* lumen_version(void);
LUMEN_API const char* lumen_status_name(lumen_status status);
/* Message of the last failure on this thread; "" when none. */
LUMEN_API const char* lumen_last_error(void);
LUMEN_API void lumen_string_free(char* s);

/* --- workspace ---------------------------------------------------------- */

/* Opens a workspace directory. With create != 0 the directory is made if
 * needed; otherwise it must exist. */
LUMEN_API lumen_status lumen_workspace_open(const char* dir, int create, lumen_workspace** out);
LUMEN_API void lumen_workspace_close(lumen_workspace* ws);
LUMEN_API lumen_status lumen_workspace_manifest(const lumen_workspace* ws, char** json_out);

/* ntl_grid may be NULL. */
LUMEN_API lumen_status lumen_ingest(lumen_workspace* ws, const char* poi_csv, const char* ntl_grid,
                                    char** summary);
/* threads = 0 uses every core. */
LUMEN_API lumen_status lumen_assess(lumen_workspace* ws, double bandwidth_m, double side_m,
                                    unsigned threads, char** summary);
LUMEN_API lumen_status lumen_cluster(lumen_workspace* ws, int k, uint64_t seed, char** summary);

typedef struct lumen_dml_options {
  const char* category; /* NULL runs every category */
  int folds;
  uint64_t seed;
  double l1_ratio;
  const double* split; /* NULL, or 3 ratios for holdout diagnostics */
  int drop_missing;    /* nonzero drops areas without the treated category */
} lumen_dml_options;

/* Fills the defaults: all categories, 3 folds, seed 0, l1_ratio 0.5. */
LUMEN_API void lumen_dml_options_init(lumen_dml_options* opts);
LUMEN_API lumen_status lumen_dml(lumen_workspace* ws, const lumen_dml_options* opts, char** summary);

/* area may be NULL (highest-scoring area). The report JSON is returned and
 * written to whatif.json. */
LUMEN_API lumen_status lumen_whatif(lumen_workspace* ws, const char* spec_path, const char* area, int all_maps,
                                    char** report_json);
/* out_path may be NULL (maps/<area>.ppm in the workspace). */
LUMEN_API lumen_status lumen_render(lumen_workspace* ws, const char* area, int size, const char* out_path,
                                    char** written_path);
LUMEN_API lumen_status lumen_plots(lumen_workspace* ws, const char* area, char** written_path);

/* --- stateless operations ---------------------------------------------- */

LUMEN_API lumen_status lumen_influence(double ntl, double distance_m, double bandwidth_m, double* out);
LUMEN_API lumen_status lumen_level_kl(const double* p, const double* q, size_t n, double* out);
LUMEN_API lumen_status lumen_metrics(const char* ppm_a, const char* ppm_b, char** json_out);
LUMEN_API lumen_status lumen_synth(const char* spec_json, const char* out_csv, char** summary);
/* *all_passed is set to 1 when every kernel passes. */
LUMEN_API lumen_status lumen_losses_selftest(uint64_t seed, int points, char** report, int* all_passed);

/* --- HTTP service ------------------------------------------------------- */

typedef struct lumen_service_options {
  const char* cors_origin; /* NULL or "" disables CORS */
  size_t max_scenario_areas;
  int session_ttl_seconds;
} lumen_service_options;

LUMEN_API void lumen_service_options_init(lumen_service_options* opts);
LUMEN_API lumen_status lumen_service_create(const char* workspace_dir, const lumen_service_options* opts,
                                            lumen_service** out);
/* Serves on a background thread; port 0 picks a free port. */
LUMEN_API lumen_status lumen_service_start(lumen_service* svc, const char* host, int port, int* bound_port);
/* Serves on the calling thread until lumen_service_stop(). */
LUMEN_API lumen_status lumen_service_listen(lumen_service* svc, const char* host, int port);
LUMEN_API lumen_status lumen_service_stop(lumen_service* svc);
LUMEN_API int lumen_service_port(const lumen_service* svc);
LUMEN_API void lumen_service_destroy(lumen_service* svc);

#ifdef __cplusplus
}
#endif

#endif /* LUMEN_LUMEN_H */
