/* C interface to the isoprice library.
 *
 * Every function returns an isp_status. On failure a message describing the
 * error is available from isp_last_error() on the calling thread until the
 * next call into the library from that thread.
 *
 * Unbounded coverage limits are passed as INFINITY.
 */
#ifndef ISOPRICE_H
#define ISOPRICE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ISOPRICE_BUILDING)
#    define ISOPRICE_API __declspec(dllexport)
#  else
#    define ISOPRICE_API __declspec(dllimport)
#  endif
#else
#  define ISOPRICE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum isp_status {
  ISP_OK = 0,
  ISP_ERR_ARGUMENT = 1,
  ISP_ERR_CONFIG = 2, /* bad configuration or unparsable input file */
  ISP_ERR_STALL = 3,  /* a particle slot exhausted its proposal budget */
  ISP_ERR_DEGENERATE_WEIGHTS = 4,
  ISP_ERR_DOMAIN = 5,
  ISP_ERR_IO = 6,
  ISP_ERR_STATE = 7,
  ISP_ERR_INTERNAL = 99
} isp_status;

ISOPRICE_API const char* isp_version(void);
ISOPRICE_API const char* isp_last_error(void);

/* Called with one progress line at a time. */
typedef void (*isp_log_fn)(const char* line, void* user);

/* ---- numerical primitives ------------------------------------------------ */

ISOPRICE_API isp_status isp_coverage_payout(double x, double rate, double deductible,
                                            double limit, double* out);

/* Weighted isotonic fit; `fitted` receives n values in input order. */
ISOPRICE_API isp_status isp_pava_fit(const double* x, const double* y, const double* w,
                                     size_t n, double* fitted);

/* Distance between commercial premiums and the isotonic link on `pure`.
 * With use_corridor == 0 the corridor bounds are ignored. */
ISOPRICE_API isp_status isp_total_distance(const double* commercial, const double* pure,
                                           const double* rmse_weights,
                                           const double* iso_weights, size_t n,
                                           int use_corridor, double lr_low,
                                           double lr_high, double* out);

ISOPRICE_API isp_status isp_ess(const double* weights, size_t n, double* out);

/* ---- quotes -------------------------------------------------------------- */

typedef struct isp_quotes isp_quotes;

ISOPRICE_API isp_status isp_quotes_load(const char* path, isp_quotes** out);
ISOPRICE_API void isp_quotes_free(isp_quotes* quotes);
ISOPRICE_API size_t isp_quotes_count(const isp_quotes* quotes);
ISOPRICE_API isp_status isp_quotes_get(const isp_quotes* quotes, size_t index,
                                       double* rate, double* deductible,
                                       double* limit, double* premium);
ISOPRICE_API size_t isp_quotes_class_count(const isp_quotes* quotes);
/* Label "specie|breed|gender|age"; the pointer lives as long as `quotes`. */
ISOPRICE_API isp_status isp_quotes_class_label(const isp_quotes* quotes, size_t k,
                                               const char** label, size_t* size);

/* ---- configuration ------------------------------------------------------- */

typedef struct isp_config isp_config;

ISOPRICE_API isp_status isp_config_parse(const char* json_text, isp_config** out);
ISOPRICE_API void isp_config_free(isp_config* config);

/* ---- fitting ------------------------------------------------------------- */

typedef struct isp_fit isp_fit;

/* Fits the single risk class selected by the configuration. */
ISOPRICE_API isp_status isp_fit_run(const isp_config* config, isp_log_fn log,
                                    void* user, isp_fit** out);
ISOPRICE_API void isp_fit_free(isp_fit* fit);
ISOPRICE_API size_t isp_fit_dimension(const isp_fit* fit);
ISOPRICE_API size_t isp_fit_generations(const isp_fit* fit);
/* Tolerance selected at each generation; `out` holds isp_fit_generations values. */
ISOPRICE_API isp_status isp_fit_epsilons(const isp_fit* fit, double* out);
ISOPRICE_API isp_status isp_fit_map(const isp_fit* fit, double* out);
ISOPRICE_API isp_status isp_fit_mode(const isp_fit* fit, double* out);
/* Run artifact JSON; the pointer lives as long as `fit`. */
ISOPRICE_API isp_status isp_fit_artifact(const isp_fit* fit, const char** json_text,
                                         size_t* size);

/* ---- commands ------------------------------------------------------------ */

/* Each writes its output files under the configured output directory. */
ISOPRICE_API isp_status isp_cmd_simulate(const isp_config* config, isp_log_fn log, void* user);
ISOPRICE_API isp_status isp_cmd_fit(const isp_config* config, isp_log_fn log, void* user);
ISOPRICE_API isp_status isp_cmd_distance_grid(const isp_config* config, isp_log_fn log,
                                              void* user);
ISOPRICE_API isp_status isp_cmd_isotonic_link(const isp_config* config, isp_log_fn log,
                                              void* user);
ISOPRICE_API isp_status isp_cmd_compare_links(const isp_config* config, isp_log_fn log,
                                              void* user);

#ifdef __cplusplus
}
#endif

#endif /* ISOPRICE_H */
