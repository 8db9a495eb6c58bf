#ifndef SPIKENET_H
#define SPIKENET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SPIKENET_API __declspec(dllexport)
#else
#define SPIKENET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spikenet_status {
  SPIKENET_OK = 0,
  SPIKENET_INVALID_ARGUMENT = 1,
  SPIKENET_ALL_SILENT = 2,
  SPIKENET_RANGE_TOO_LARGE = 3,
  SPIKENET_OUT_OF_DOMAIN = 4,
  SPIKENET_TOO_FEW_SAMPLES = 5,
  SPIKENET_NO_CONVERGENCE = 6,
  SPIKENET_EMPTY_REFERENCE = 7,
  SPIKENET_EMPTY_DISTRIBUTION = 8,
  SPIKENET_NON_POSITIVE_VALUE = 9,
  SPIKENET_UNKNOWN_SCENARIO = 10,
  SPIKENET_CONFIG_ERROR = 11,
  SPIKENET_IO_ERROR = 12,
  SPIKENET_INTERNAL_ERROR = 13
} spikenet_status;

typedef struct spikenet_config spikenet_config;
typedef struct spikenet_manifest spikenet_manifest;
typedef struct spikenet_report spikenet_report;

SPIKENET_API const char* spikenet_version(void);
SPIKENET_API const char* spikenet_status_name(spikenet_status status);
/* Message of the last failure on the calling thread; "" if none. */
SPIKENET_API const char* spikenet_last_error(void);

SPIKENET_API spikenet_status spikenet_reproduction_number(double mu, double gamma, int kappa,
                                                          double rho, double* out);
SPIKENET_API spikenet_status spikenet_chaos_threshold(double mu, double gamma, int kappa,
                                                      double rho, double* out);
/* Writes "Subcritical", "Critical" or "Supercritical" (static storage). */
SPIKENET_API spikenet_status spikenet_classify_regime(double mu, double gamma, int kappa,
                                                      double rho, const char** out);

SPIKENET_API spikenet_status spikenet_config_parse(const char* json_text, spikenet_config** out);
SPIKENET_API spikenet_status spikenet_config_load(const char* path, spikenet_config** out);
SPIKENET_API void spikenet_config_free(spikenet_config* config);
SPIKENET_API spikenet_status spikenet_config_set_seed(spikenet_config* config, uint64_t seed);
SPIKENET_API spikenet_status spikenet_config_set_workers(spikenet_config* config, unsigned workers);
SPIKENET_API spikenet_status spikenet_config_set_output_dir(spikenet_config* config, const char* dir);
SPIKENET_API spikenet_status spikenet_config_set_format(spikenet_config* config, const char* format);
/* Pointers stay valid until the config is changed or freed. */
SPIKENET_API const char* spikenet_config_scenario(const spikenet_config* config);
SPIKENET_API const char* spikenet_config_json(const spikenet_config* config);

SPIKENET_API spikenet_status spikenet_run_scenario(const spikenet_config* config,
                                                  spikenet_manifest** out);
SPIKENET_API void spikenet_manifest_free(spikenet_manifest* manifest);
SPIKENET_API int spikenet_manifest_passed(const spikenet_manifest* manifest);
SPIKENET_API const char* spikenet_manifest_json(const spikenet_manifest* manifest);
SPIKENET_API const char* spikenet_manifest_output_dir(const spikenet_manifest* manifest);
SPIKENET_API size_t spikenet_manifest_assertion_count(const spikenet_manifest* manifest);
SPIKENET_API spikenet_status spikenet_manifest_assertion(const spikenet_manifest* manifest,
                                                        size_t index, const char** name,
                                                        int* pass, const char** detail);

typedef void (*spikenet_criterion_callback)(int id, const char* name, int pass,
                                            const char* detail, double seconds, void* user);

typedef struct spikenet_validate_options {
  const int* only; /* criterion ids, NULL for all */
  size_t only_count;
  unsigned workers;
  /* Nonzero replaces theta by kappa * (1 - exp(+rho gamma / mu)). */
  int inject_theta_fault;
  const char* scratch_dir; /* NULL for a temporary directory */
  spikenet_criterion_callback on_result;
  void* user;
} spikenet_validate_options;

SPIKENET_API void spikenet_validate_options_init(spikenet_validate_options* options);
SPIKENET_API spikenet_status spikenet_validate(const spikenet_validate_options* options,
                                              spikenet_report** out);
SPIKENET_API void spikenet_report_free(spikenet_report* report);
SPIKENET_API int spikenet_report_passed(const spikenet_report* report);
SPIKENET_API size_t spikenet_report_count(const spikenet_report* report);
SPIKENET_API spikenet_status spikenet_report_criterion(const spikenet_report* report, size_t index,
                                                      int* id, int* pass, const char** name,
                                                      const char** detail);
SPIKENET_API const char* spikenet_report_json(const spikenet_report* report);

#ifdef __cplusplus
}
#endif

#endif
