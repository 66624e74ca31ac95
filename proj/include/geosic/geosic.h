/* C interface to the geosic library. All functions return a status code;
 * on failure geosic_last_error() describes the problem (thread-local).
 * Strings returned through char** are owned by the caller and must be
 * released with geosic_string_free. */
#ifndef GEOSIC_H
#define GEOSIC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GEOSIC_BUILDING_LIBRARY)
#    define GEOSIC_API __declspec(dllexport)
#  else
#    define GEOSIC_API __declspec(dllimport)
#  endif
#elif defined(GEOSIC_BUILDING_LIBRARY)
#  define GEOSIC_API __attribute__((visibility("default")))
#else
#  define GEOSIC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum geosic_status {
  GEOSIC_OK = 0,
  GEOSIC_ERR_INTERNAL = 1,
  GEOSIC_ERR_INVALID = 2,
  GEOSIC_ERR_INFEASIBLE = 3,
  GEOSIC_ERR_CAPACITY = 4,
  GEOSIC_ERR_PARSE = 5,
  GEOSIC_ERR_IO = 6,
  GEOSIC_ERR_DECOMPOSITION = 7
} geosic_status;

typedef enum geosic_evaluator {
  GEOSIC_EVAL_FIXED_ORDER = 0, /* descending-gain SIC corner */
  GEOSIC_EVAL_LP = 1           /* exact subset-constraint LP */
} geosic_evaluator;

/* Scenario 1: undecoded geophones interfere. Scenario 2: geophones decoded
 * nowhere stay silent. */
typedef enum geosic_scenario {
  GEOSIC_SCENARIO_INTERFERES = 1,
  GEOSIC_SCENARIO_SILENT = 2
} geosic_scenario;

typedef enum geosic_stage2_problem {
  GEOSIC_STAGE2_MIN_TOTAL = 0,
  GEOSIC_STAGE2_MIN_MAX = 1,
  GEOSIC_STAGE2_WEIGHTED = 2
} geosic_stage2_problem;

typedef struct geosic_channel geosic_channel;
typedef struct geosic_gateways geosic_gateways;

GEOSIC_API const char* geosic_version(void);
GEOSIC_API const char* geosic_last_error(void);
GEOSIC_API void geosic_string_free(char* s);

/* Stage-1 instances. Gains are row-major K x N amplitudes. */
GEOSIC_API geosic_status geosic_channel_generate(size_t num_gps, size_t num_gws,
                                                 double gp_power_mw, double noise_mw,
                                                 uint64_t seed, geosic_channel** out);
GEOSIC_API geosic_status geosic_channel_create(size_t num_gps, size_t num_gws,
                                               const double* gains, double gp_power_mw,
                                               double noise_mw, geosic_channel** out);
GEOSIC_API geosic_status geosic_channel_load(const char* path, geosic_channel** out);
GEOSIC_API geosic_status geosic_channel_save(const geosic_channel* channel,
                                             const char* path);
GEOSIC_API void geosic_channel_free(geosic_channel* channel);
GEOSIC_API geosic_status geosic_channel_dims(const geosic_channel* channel,
                                             size_t* num_gps, size_t* num_gws);
GEOSIC_API geosic_status geosic_channel_gain(const geosic_channel* channel, size_t gp,
                                             size_t gw, double* out);

/* Stage-2 instances. A cap <= 0 means "no cap". */
GEOSIC_API geosic_status geosic_gateways_create(size_t num_gws, const double* queue_rates,
                                                const double* gains, double noise_mw,
                                                double per_gw_cap_mw, double total_cap_mw,
                                                geosic_gateways** out);
GEOSIC_API geosic_status geosic_gateways_load(const char* path, geosic_gateways** out);
GEOSIC_API geosic_status geosic_gateways_save(const geosic_gateways* gateways,
                                              const char* path);
GEOSIC_API void geosic_gateways_free(geosic_gateways* gateways);
GEOSIC_API geosic_status geosic_gateways_dims(const geosic_gateways* gateways,
                                              size_t* num_gws);

/* Rates of assignment `flags` (row-major K x N, nonzero = decoded).
 * `rates` may be NULL, otherwise it receives K values. */
GEOSIC_API geosic_status geosic_evaluate(const geosic_channel* channel,
                                         const uint8_t* flags, geosic_evaluator evaluator,
                                         geosic_scenario scenario, double* rates,
                                         double* sum_rate);

/* Number of decoding assignments for K geophones and N gateways, as a
 * decimal string. */
GEOSIC_API geosic_status geosic_search_space_size(unsigned num_gps, unsigned num_gws,
                                                  char** decimal);

typedef struct geosic_stage1_options {
  const char* algorithm;  /* es, dpso, ampso, as, mmas, sa, baseline */
  geosic_evaluator evaluator;
  geosic_scenario scenario;
  size_t particles;       /* M */
  size_t iterations;      /* I */
  double temperature;     /* SA start temperature; <= 0 means M * I */
  uint64_t seed;
  const char* heuristic;  /* none, gw-average, gp-deactivation; NULL: by scenario */
} geosic_stage1_options;

GEOSIC_API void geosic_stage1_options_init(geosic_stage1_options* options);

/* Runs one stage-1 search. `json` receives
 * {algorithm, sum_rate, rates, assignment, evaluations, wall_seconds, trace}. */
GEOSIC_API geosic_status geosic_stage1_optimize(const geosic_channel* channel,
                                                const geosic_stage1_options* options,
                                                char** json);

/* Solves a delivery problem. `weights` (N values) is used by the weighted
 * problem only; NULL derives w from the queue rates. `total_cap_mw` <= 0
 * uses the instance's total cap. Gateway numbers in the JSON are 1-based. */
GEOSIC_API geosic_status geosic_stage2_solve(const geosic_gateways* gateways,
                                             geosic_stage2_problem problem,
                                             const double* weights, double total_cap_mw,
                                             char** json);

/* Campaigns driven by JSON spec files. `json` receives a short report.
 * `bandwidth_khz` > 0 overrides the sizing spec's bandwidth. */
GEOSIC_API geosic_status geosic_experiment_run(const char* spec_path, char** json);
GEOSIC_API geosic_status geosic_gw_sizing_run(const char* spec_path, double bandwidth_khz,
                                              char** json);

#ifdef __cplusplus
}
#endif

#endif /* GEOSIC_H */
