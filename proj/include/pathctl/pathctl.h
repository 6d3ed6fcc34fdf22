#ifndef PATHCTL_PATHCTL_H
#define PATHCTL_PATHCTL_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(PATHCTL_BUILDING)
#define PC_API __declspec(dllexport)
#else
#define PC_API __declspec(dllimport)
#endif
#else
#define PC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pc_status {
  PC_OK = 0,
  PC_ERR_INVALID_ARGUMENT = 1,
  PC_ERR_DIMENSION = 2,
  PC_ERR_OUT_OF_RANGE = 3,
  PC_ERR_NON_FINITE = 4,
  PC_ERR_CAP_EXCEEDED = 5,
  PC_ERR_CONTRACT = 6,
  PC_ERR_DIVERGENCE = 7,
  PC_ERR_CONFIG = 8,
  PC_ERR_INTERNAL = 9
} pc_status;

typedef struct pc_report pc_report;
typedef struct pc_path pc_path;

/* Message of the last failed call on this thread; "" after a success. */
PC_API const char* pc_last_error(void);
PC_API const char* pc_version(void);

/* Experiments */
PC_API size_t pc_experiment_count(void);
/* NULL when index is out of range. */
PC_API const char* pc_experiment_name(size_t index);
PC_API const char* pc_experiment_description(const char* name);
/* Default configuration as compact JSON. */
PC_API const char* pc_experiment_preset(const char* name);

/* Runs `name` on a JSON config with optional "dotted.key=value" overrides.
   On success *out owns a report to release with pc_report_free. */
PC_API pc_status pc_experiment_run(const char* name, const char* config_json, const char* const* overrides,
                                   size_t n_overrides, pc_report** out);

PC_API const char* pc_report_csv(const pc_report* r);
PC_API const char* pc_report_summary(const pc_report* r);
/* 1 when every property checked by the run held. */
PC_API int pc_report_passed(const pc_report* r);
PC_API size_t pc_report_rows(const pc_report* r);
PC_API void pc_report_free(pc_report* r);

/* Paths: `values` is column-major dim x (t_index + 1). */
PC_API pc_status pc_path_create(size_t dim, size_t t_index, double dt, const double* values, pc_path** out);
PC_API void pc_path_free(pc_path* p);
PC_API pc_status pc_path_sup_norm(const pc_path* p, double* out);
PC_API pc_status pc_path_d_infty(const pc_path* p, const pc_path* q, double* out);
PC_API pc_status pc_upsilon(const pc_path* p, const pc_path* q, int m, double M, double* out);
PC_API pc_status pc_upsilon_bar(const pc_path* p, const pc_path* q, int m, double M, double* out);

#ifdef __cplusplus
}
#endif

#endif
