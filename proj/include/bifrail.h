/* bifrail — bivariate current status data with competing risks under four
 * Gamma frailty dependence models: model evaluation, maximum likelihood
 * fitting, and simulation studies.
 *
 * C API over the C++ core: opaque handles, status codes, thread-local error
 * messages. All cause indices are 1-based; j = 0 denotes "censored".
 */
#ifndef BIFRAIL_H
#define BIFRAIL_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bf_status {
    BF_OK = 0,
    BF_ERR_INVALID = 1,    /* bad argument / parameter constraint violated */
    BF_ERR_PARSE = 2,      /* config or dataset file malformed */
    BF_ERR_DOMAIN = 3,     /* overflow guard tripped */
    BF_ERR_NONCONV = 4,    /* quadrature/calibration did not converge */
    BF_ERR_BRACKET = 5,    /* root bracket invalid */
    BF_ERR_UNSTABLE = 6,   /* cross-ratio tail underflow */
    BF_ERR_INTEGRITY = 7,  /* internal consistency check failed */
    BF_ERR_IO = 8,
    BF_ERR_UNKNOWN = 9
} bf_status;

const char* bf_status_name(bf_status s);
/* message from the most recent failing call on this thread */
const char* bf_last_error(void);
const char* bf_version(void);

typedef struct bf_model bf_model;
typedef struct bf_dataset bf_dataset;
typedef struct bf_fit_result bf_fit_result;
typedef struct bf_sim_config bf_sim_config;
typedef struct bf_sim_summary bf_sim_summary;

/* ---- model configuration (JSON file, see README for the schema) ---- */

bf_status bf_model_read_config(const char* path, bf_model** out);
bf_status bf_model_parse_config(const char* text, bf_model** out);
void bf_model_free(bf_model* m);
int bf_model_causes(const bf_model* m, int individual /* 1 or 2 */);
int bf_model_param_count(const bf_model* m);
const char* bf_model_param_name(const bf_model* m, int i);

/* ---- model functions ---- */

bf_status bf_joint_survival(const bf_model* m, double t1, double t2, double* out);
bf_status bf_joint_sub_density(const bf_model* m, int j1, int j2, double t1, double t2,
                               double* out);
bf_status bf_joint_sub_distribution(const bf_model* m, int j1, int j2, double t1, double t2,
                                    double* out);
bf_status bf_marginal_sub_distribution(const bf_model* m, int individual, int j, double t,
                                       double* out);
bf_status bf_marginal_survival(const bf_model* m, int individual, double t, double* out);
bf_status bf_cross_ratio(const bf_model* m, int j1, int j2, double t1, double t2, double* out);

/* ---- datasets (CSV with header x1,x2,j1,j2) ---- */

/* l1/l2 = 0 infers the cause counts from the data */
bf_status bf_dataset_read_csv(const char* path, int l1, int l2, bf_dataset** out);
void bf_dataset_free(bf_dataset* d);
long bf_dataset_size(const bf_dataset* d);
int bf_dataset_causes(const bf_dataset* d, int individual);
bf_status bf_dataset_write_csv(const bf_dataset* d, const char* path);

/* ---- likelihood and fitting ---- */

bf_status bf_log_likelihood(const bf_model* m, const bf_dataset* d, double* out);
/* maximizes from the parameter values declared in the model config, with the
 * config's fit options */
bf_status bf_fit(const bf_model* m, const bf_dataset* d, bf_fit_result** out);
void bf_fit_result_free(bf_fit_result* r);
double bf_fit_result_loglik(const bf_fit_result* r);
double bf_fit_result_aic(const bf_fit_result* r);
int bf_fit_result_converged(const bf_fit_result* r);
int bf_fit_result_param_count(const bf_fit_result* r);
const char* bf_fit_result_param_name(const bf_fit_result* r, int i);
double bf_fit_result_estimate(const bf_fit_result* r, int i);
int bf_fit_result_has_se(const bf_fit_result* r);
double bf_fit_result_se(const bf_fit_result* r, int i); /* NaN when unavailable */
bf_status bf_fit_result_write_json(const bf_fit_result* r, const bf_model* m,
                                   const char* data_path, const bf_dataset* d,
                                   const char* out_path);

/* 2(l_full - l_restricted) against a chi-square upper tail */
bf_status bf_likelihood_ratio_test(double loglik_full, double loglik_restricted, int df,
                                   double* statistic, double* p_value);

/* ---- simulation studies ---- */

bf_status bf_sim_config_read(const char* path, bf_sim_config** out);
void bf_sim_config_free(bf_sim_config* c);
bf_status bf_solve_monitoring_rate(const bf_model* m, double p_cen, double* mu_out);
bf_status bf_run_study(const bf_sim_config* c, bf_sim_summary** out);
void bf_sim_summary_free(bf_sim_summary* s);
bf_status bf_sim_summary_write_csv(const bf_sim_summary* s, const char* path);
bf_status bf_sim_summary_write_json(const bf_sim_summary* s, const bf_sim_config* c,
                                    const char* path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BIFRAIL_H */
