/* C interface to the precond library. All handles are opaque; every call
 * returns a pc_status and, on failure, records a message retrievable with
 * pc_last_error() on the calling thread. Strings returned through char**
 * out-parameters are owned by the caller and released with pc_string_free. */
#ifndef PRECOND_PRECOND_H
#define PRECOND_PRECOND_H

#include <stddef.h>
#include <stdint.h>

#if defined(PRECOND_BUILDING_LIBRARY)
#define PC_API __attribute__((visibility("default")))
#else
#define PC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pc_status {
  PC_OK = 0,
  PC_ERR_INVALID_INPUT = 1,
  PC_ERR_WRONG_OUTCOME = 2,
  PC_ERR_NO_EVENTS = 3,
  PC_ERR_EMPTY_SCREEN = 4,
  PC_ERR_RANK = 5,
  PC_ERR_SCHEMA = 6,
  PC_ERR_DEGENERATE_STEP = 7,
  PC_ERR_CONVERGENCE = 8,
  PC_ERR_DEGENERATE_COVARIATE = 9,
  PC_ERR_INVALID_CLASS = 10,
  PC_ERR_SPEC = 11,
  PC_ERR_SINGULAR = 12,
  PC_ERR_SIZE = 13,
  PC_ERR_IO = 14,
  PC_ERR_INTERNAL = 15
} pc_status;

typedef struct pc_dataset pc_dataset;
typedef struct pc_report pc_report;

PC_API const char* pc_version(void);
/* Message of the last failing call on this thread ("" if none). */
PC_API const char* pc_last_error(void);
/* Stable kebab-case name, e.g. "empty-screen". */
PC_API const char* pc_status_name(pc_status status);
PC_API void pc_string_free(char* s);

/* ---- datasets. `outcome` is "continuous", "survival" or "class". */
PC_API pc_status pc_dataset_read_csv(const char* path, const char* outcome, pc_dataset** out);
PC_API pc_status pc_dataset_write_csv(const pc_dataset* d, const char* path);
/* x is column-major n x p. */
PC_API pc_status pc_dataset_create(const double* x, size_t n, size_t p, const double* y,
                                   pc_dataset** out);
PC_API pc_status pc_dataset_create_survival(const double* x, size_t n, size_t p,
                                            const double* time, const int* status,
                                            pc_dataset** out);
PC_API pc_status pc_dataset_create_class(const double* x, size_t n, size_t p, const int* labels,
                                         pc_dataset** out);
PC_API pc_status pc_dataset_shape(const pc_dataset* d, size_t* n, size_t* p);
PC_API pc_status pc_dataset_standardize(const pc_dataset* d, pc_dataset** out);
PC_API void pc_dataset_free(pc_dataset* d);

/* ---- analysis. Inputs are standardized internally (and continuous
 * responses centered) unless already standardized.
 * Screening rule: tau >= 0 selects |score| >= tau; otherwise top_m > 0 keeps
 * the top_m largest; otherwise the default top-m rule applies. */

/* CSV text with columns feature_id,score,selected. */
PC_API pc_status pc_screen(const pc_dataset* d, double tau, long top_m, char** csv_out);

/* method: spc, fs, spc-fs, lasso, spc-lasso or nsc-fs. max_steps <= 0 means
 * min(n - 1, p, 20). Emits a JSON document. */
PC_API pc_status pc_fit(const pc_dataset* d, const char* method, long k, double tau, long top_m,
                        long max_steps, char** json_out);

/* LASSO path on the raw (preconditioned == 0) or SPC-preconditioned response.
 * raw_scale != 0 reports penalties for ||y - Xb||^2 + mu ||b||_1, otherwise for
 * (1/n)||y - Xb||^2 + mu ||b||_1. max_entries <= 0 runs the full path.
 * knots_csv has columns knot,mu,feature_id,coefficient (nonzero entries only);
 * entry_json lists feature ids in order of first entry. */
PC_API pc_status pc_path(const pc_dataset* d, int preconditioned, long k, double tau, long top_m,
                         int raw_scale, long max_entries, char** knots_csv, char** entry_json);

/* ---- simulation and experiments. config_json uses the experiment schema. */

/* Writes train.csv, test.csv (when the generator has a test set) and
 * spec.json with population quantities into out_dir. */
PC_API pc_status pc_simulate(const char* config_json, uint64_t seed, long replication,
                             const char* out_dir);

PC_API pc_status pc_experiment_run(const char* config_json, pc_report** out);
PC_API pc_status pc_report_write(const pc_report* r, const char* dir, const char* format);
PC_API pc_status pc_report_summary_json(const pc_report* r, char** json_out);
PC_API void pc_report_free(pc_report* r);

#ifdef __cplusplus
}
#endif

#endif /* PRECOND_PRECOND_H */
