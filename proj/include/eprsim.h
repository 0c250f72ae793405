/* eprsim — contextual frequency-probability laboratory for EPR-Bohm
 * correlations. C interface of the shared library: opaque model handles,
 * status codes, flat double[4] joint tables in (11,12,21,22) row-major
 * order, structured results as JSON strings owned by the library. */
#ifndef EPRSIM_H
#define EPRSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EPRSIM_API __declspec(dllexport)
#else
#define EPRSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eprsim_status {
  EPRSIM_OK = 0,
  EPRSIM_ERR_INVALID_ARGUMENT = 1,  /* null pointer / malformed primitive input */
  EPRSIM_ERR_DOMAIN = 2,            /* precondition violated */
  EPRSIM_ERR_SINGULAR_CONTEXT = 3,  /* entanglement coefficient undefined */
  EPRSIM_ERR_INADMISSIBLE_PHASES = 4,
  EPRSIM_ERR_EMPTY_CONTEXT = 5,
  EPRSIM_ERR_INFEASIBLE_HIDDEN_ALLOCATION = 6,
  EPRSIM_ERR_PARSE = 7,
  EPRSIM_ERR_INTERNAL = 8
} eprsim_status;

/* Opaque contextual model handle. */
typedef struct eprsim_model eprsim_model;

EPRSIM_API const char* eprsim_version(void);
EPRSIM_API const char* eprsim_status_name(eprsim_status status);
/* Message for the last failing call on this thread; empty string if none. */
EPRSIM_API const char* eprsim_last_error(void);

/* ---- model lifecycle -------------------------------------------------- */

/* EPR-Bohm model for analyzers at gamma, gamma_prime: symmetric settings,
 * double-stochastic matrices from alpha = gamma/2, beta = gamma_prime/2,
 * maximal-magnitude phase pattern. */
EPRSIM_API eprsim_status eprsim_model_epr(double gamma, double gamma_prime, eprsim_model** out);
EPRSIM_API eprsim_status eprsim_model_from_json(const char* json_text, eprsim_model** out);
EPRSIM_API eprsim_status eprsim_model_to_json(const eprsim_model* model, char** json_out);
EPRSIM_API void eprsim_model_free(eprsim_model* model);
/* Frees any string returned through a char** out-parameter. */
EPRSIM_API void eprsim_string_free(char* text);

/* Validation never fails on model content; it reports. Any out-parameter may
 * be NULL. report_json_out lists every invariant with pass flag and residual. */
EPRSIM_API eprsim_status eprsim_model_validate(const eprsim_model* model, char** report_json_out,
                                               int* all_pass, int* epr_admissible);

/* ---- closed-form algebra ---------------------------------------------- */

/* EPR-Bohm probabilities: diagonal sin^2(delta/2)/2, off-diagonal
 * cos^2(delta/2)/2 with delta = gamma_prime - gamma. */
EPRSIM_API eprsim_status eprsim_epr_table(double gamma, double gamma_prime, double table_out[4]);
/* Joint outcome table of the model through the phase transformation. */
EPRSIM_API eprsim_status eprsim_model_table(const eprsim_model* model, double table_out[4]);
/* Disturbance term (observed minus classical mixture) and entanglement
 * coefficients; either output may be NULL. */
EPRSIM_API eprsim_status eprsim_model_disturbance(const eprsim_model* model, double delta_out[4],
                                                  double lambda_out[4]);
EPRSIM_API eprsim_status eprsim_correlation(const double table[4], double* correlation_out);
EPRSIM_API eprsim_status eprsim_chsh(double gamma1, double gamma2, double gamma1_prime,
                                     double gamma2_prime, double* s_out);
/* One row of the lambda-magnitude sweep: scale the maximal phase pattern by
 * `scale` and report {"s","regime","admissible","E","S_opt"}. E is evaluated
 * at (gamma, gamma') = (pi/4, pi/2); E and S_opt are the algebraic
 * continuation mixture + s * interference, admissible says whether the scaled
 * pattern still yields a probability table there. */
EPRSIM_API eprsim_status eprsim_lambda_scan_row(double scale, char** row_json_out);

/* ---- seeded simulation ------------------------------------------------ */

/* Deterministic substream derivation (splitmix64 chain); stream id semantics
 * are documented in the project README. */
EPRSIM_API uint64_t eprsim_derive_seed(uint64_t seed, uint64_t stream_id);

/* Frequency table of the undisturbed outcome pairs in a sampled source
 * ensemble of the EPR model; the Monte Carlo estimator of the closed form. */
EPRSIM_API eprsim_status eprsim_mc_epr_table(double gamma, double gamma_prime, uint64_t samples,
                                             uint64_t seed, double table_out[4]);

/* Full simulation report as JSON: hidden table, per-context setting
 * frequencies and selected/hidden tables, and (for anticorrelated models)
 * the finite-M disturbance and recovered entanglement coefficients. */
EPRSIM_API eprsim_status eprsim_simulate(const eprsim_model* model, uint64_t samples,
                                         uint64_t seed, char** result_json_out);

/* Finite-M disturbance delta^(M) and lambda recovered through empirical
 * marginals; either output may be NULL. Requires an anticorrelated model. */
EPRSIM_API eprsim_status eprsim_empirical_lambda(const eprsim_model* model, uint64_t samples,
                                                 uint64_t seed, double delta_out[4],
                                                 double lambda_out[4]);

/* Columnar CSV of the realized ensemble (selection re-draws included):
 * index,a,a_prime,hidden_b,hidden_b_prime,selected_b,selected_b_prime,context */
EPRSIM_API eprsim_status eprsim_ensemble_csv(const eprsim_model* model, uint64_t samples,
                                             uint64_t seed, char** csv_out);

/* Non-stabilization demonstration. pair_json selects the two block-alternating
 * hidden distributions (NULL for the built-in default pair); layout:
 *   {"qa": {"12": 2x2, "21": 2x2}, "qb": {...},
 *    "target": {"b": [i,j], "a": [k,l]}}        (target optional)
 * Result JSON carries every trace with its checkpoints and verdict. */
EPRSIM_API eprsim_status eprsim_fluctuation_demo(const char* pair_json, uint64_t samples,
                                                 uint64_t seed, double epsilon, int window,
                                                 char** result_json_out);

#ifdef __cplusplus
}
#endif

#endif /* EPRSIM_H */
