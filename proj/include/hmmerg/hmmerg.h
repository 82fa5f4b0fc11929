#ifndef HMMERG_H
#define HMMERG_H

/* C interface to the hmmerg library. Every function returns a status code;
 * on failure hmmerg_last_error() describes the problem for the calling
 * thread. Strings returned through char** are owned by the caller and must
 * be released with hmmerg_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HMMERG_API __declspec(dllexport)
#else
#define HMMERG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hmmerg_status {
  HMMERG_OK = 0,
  HMMERG_E_INVALID_ARGUMENT = 1,
  HMMERG_E_NON_STOCHASTIC,
  HMMERG_E_NEGATIVE_DENSITY,
  HMMERG_E_UNKNOWN_OBSERVATION,
  HMMERG_E_STATE_SPACE_MISMATCH,
  HMMERG_E_SPACE_MISMATCH,
  HMMERG_E_MASS_MISMATCH,
  HMMERG_E_NEGATIVE_TARGET,
  HMMERG_E_SOLVER_FAILURE,
  HMMERG_E_BUDGET_EXCEEDED,
  HMMERG_E_BARYCENTER_MISMATCH,
  HMMERG_E_DEGENERATE_PRODUCT,
  HMMERG_E_NONPOSITIVE_ENTRY,
  HMMERG_E_KAPPA_BELOW_ONE,
  HMMERG_E_HYPOTHESIS_VIOLATED,
  HMMERG_E_DIVISION_BY_ZERO_MASS,
  HMMERG_E_CERTIFICATE_INVALID,
  HMMERG_E_BAD_PARTITION,
  HMMERG_E_NON_STOCHASTIC_EMISSION,
  HMMERG_E_PARSE,
  HMMERG_E_IO,
  HMMERG_E_INTERNAL = 100
} hmmerg_status;

/* Report verdicts. */
enum { HMMERG_PASS = 0, HMMERG_VIOLATED = 2, HMMERG_INCONCLUSIVE = 3 };

typedef struct hmmerg_model hmmerg_model;
typedef struct hmmerg_measure hmmerg_measure;

typedef struct hmmerg_options {
  double rho;
  size_t nmax;
  uint64_t seed;
  size_t budget;
  size_t steps;
  /* Optional Condition P candidate as JSON arrays of ids, or NULL. */
  const char* f0_json;
  const char* b0_json;
} hmmerg_options;

HMMERG_API void hmmerg_options_default(hmmerg_options* options);

HMMERG_API const char* hmmerg_last_error(void);
HMMERG_API const char* hmmerg_status_name(int status);
HMMERG_API void hmmerg_string_free(char* s);

HMMERG_API int hmmerg_model_load(const char* path, hmmerg_model** out);
HMMERG_API int hmmerg_model_from_json(const char* json, hmmerg_model** out);
HMMERG_API int hmmerg_model_to_json(const hmmerg_model* model, char** json_out);
HMMERG_API void hmmerg_model_free(hmmerg_model* model);
HMMERG_API int hmmerg_model_num_states(const hmmerg_model* model, size_t* out);
HMMERG_API int hmmerg_model_num_obs(const hmmerg_model* model, size_t* out);

/* Densities are arrays of num_states values w.r.t. lambda. */
HMMERG_API int hmmerg_stationary(const hmmerg_model* model, double* pi_out, size_t len);
HMMERG_API int hmmerg_likelihood(const hmmerg_model* model, const double* x, size_t len, size_t obs,
                                 double* out);
HMMERG_API int hmmerg_update(const hmmerg_model* model, const double* x, size_t len, size_t obs, double* out);

/* model may be NULL when the file carries its own lambda. */
HMMERG_API int hmmerg_measure_load(const char* path, const hmmerg_model* model, hmmerg_measure** out);
HMMERG_API int hmmerg_measure_from_json(const char* json, const hmmerg_model* model, hmmerg_measure** out);
HMMERG_API void hmmerg_measure_free(hmmerg_measure* measure);
HMMERG_API int hmmerg_kantorovich(const hmmerg_measure* mu, const hmmerg_measure* nu, double* distance);

/* Reports: JSON of the form {"report": ..., "tables": {...}, "verdict": v}
 * with v also stored in *verdict. */
HMMERG_API int hmmerg_check(const hmmerg_model* model, const hmmerg_options* options, char** json_out,
                            int* verdict);
HMMERG_API int hmmerg_contract(const hmmerg_model* model, const hmmerg_options* options, char** json_out,
                               int* verdict);
HMMERG_API int hmmerg_ergodics(const hmmerg_model* model, const hmmerg_options* options, char** json_out,
                               int* verdict);
HMMERG_API int hmmerg_couple(const hmmerg_model* model, const hmmerg_options* options, char** json_out,
                             int* verdict);
HMMERG_API int hmmerg_simulate(const hmmerg_model* model, const hmmerg_options* options, char** json_out,
                               int* verdict);
HMMERG_API int hmmerg_transport(const hmmerg_measure* mu, const hmmerg_measure* nu, char** json_out,
                                int* verdict);

#ifdef __cplusplus
}
#endif

#endif
