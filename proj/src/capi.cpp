#include "bifrail.h"

#include <cmath>
#include <cstring>
#include <string>

#include "errors.hpp"
#include "io.hpp"

using namespace bifrail;

namespace {

thread_local std::string g_last_error;

bf_status map_code(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return BF_ERR_INVALID;
        case ErrorCode::parse: return BF_ERR_PARSE;
        case ErrorCode::domain_overflow: return BF_ERR_DOMAIN;
        case ErrorCode::non_convergence: return BF_ERR_NONCONV;
        case ErrorCode::bracket: return BF_ERR_BRACKET;
        case ErrorCode::unstable_point: return BF_ERR_UNSTABLE;
        case ErrorCode::integrity: return BF_ERR_INTEGRITY;
        case ErrorCode::io: return BF_ERR_IO;
    }
    return BF_ERR_UNKNOWN;
}

template <class F>
bf_status wrap(F&& f) noexcept {
    try {
        f();
        return BF_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BF_ERR_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown error";
        return BF_ERR_UNKNOWN;
    }
}

}  // namespace

struct bf_model {
    ModelConfig cfg;
    std::vector<std::string> names;
};

struct bf_dataset {
    Dataset data;
};

struct bf_fit_result {
    FitResult res;
};

struct bf_sim_config {
    SimFileConfig cfg;
};

struct bf_sim_summary {
    SimSummary summary;
};

extern "C" {

const char* bf_status_name(bf_status s) {
    switch (s) {
        case BF_OK: return "ok";
        case BF_ERR_INVALID: return "invalid-argument";
        case BF_ERR_PARSE: return "parse";
        case BF_ERR_DOMAIN: return "domain-overflow";
        case BF_ERR_NONCONV: return "non-convergence";
        case BF_ERR_BRACKET: return "bracket";
        case BF_ERR_UNSTABLE: return "unstable-point";
        case BF_ERR_INTEGRITY: return "integrity";
        case BF_ERR_IO: return "io";
        case BF_ERR_UNKNOWN: return "unknown";
    }
    return "unknown";
}

const char* bf_last_error(void) { return g_last_error.c_str(); }

const char* bf_version(void) { return kToolVersion; }

bf_status bf_model_read_config(const char* path, bf_model** out) {
    return wrap([&] {
        if (!path || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        auto m = new bf_model{read_model_config(path), {}};
        m->names = param_names(m->cfg.spec);
        *out = m;
    });
}

bf_status bf_model_parse_config(const char* text, bf_model** out) {
    return wrap([&] {
        if (!text || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        auto m = new bf_model{parse_model_config(text, "<string>"), {}};
        m->names = param_names(m->cfg.spec);
        *out = m;
    });
}

void bf_model_free(bf_model* m) { delete m; }

int bf_model_causes(const bf_model* m, int individual) {
    if (!m || (individual != 1 && individual != 2)) return 0;
    return m->cfg.spec.causes(individual);
}

int bf_model_param_count(const bf_model* m) { return m ? (int)m->names.size() : 0; }

const char* bf_model_param_name(const bf_model* m, int i) {
    if (!m || i < 0 || i >= (int)m->names.size()) return nullptr;
    return m->names[i].c_str();
}

bf_status bf_joint_survival(const bf_model* m, double t1, double t2, double* out) {
    return wrap([&] {
        if (!m || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = joint_survival(m->cfg.spec, t1, t2);
    });
}

bf_status bf_joint_sub_density(const bf_model* m, int j1, int j2, double t1, double t2,
                               double* out) {
    return wrap([&] {
        if (!m || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = joint_sub_density(m->cfg.spec, j1, j2, t1, t2);
    });
}

bf_status bf_joint_sub_distribution(const bf_model* m, int j1, int j2, double t1, double t2,
                                    double* out) {
    return wrap([&] {
        if (!m || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = joint_sub_distribution(m->cfg.spec, j1, j2, t1, t2);
    });
}

bf_status bf_marginal_sub_distribution(const bf_model* m, int individual, int j, double t,
                                       double* out) {
    return wrap([&] {
        if (!m || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = marginal_sub_distribution(m->cfg.spec, individual, j, t);
    });
}

bf_status bf_marginal_survival(const bf_model* m, int individual, double t, double* out) {
    return wrap([&] {
        if (!m || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = marginal_survival(m->cfg.spec, individual, t);
    });
}

bf_status bf_cross_ratio(const bf_model* m, int j1, int j2, double t1, double t2, double* out) {
    return wrap([&] {
        if (!m || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = cross_ratio(m->cfg.spec, j1, j2, t1, t2);
    });
}

bf_status bf_dataset_read_csv(const char* path, int l1, int l2, bf_dataset** out) {
    return wrap([&] {
        if (!path || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = new bf_dataset{read_dataset_csv(path, l1, l2)};
    });
}

void bf_dataset_free(bf_dataset* d) { delete d; }

long bf_dataset_size(const bf_dataset* d) { return d ? (long)d->data.observations.size() : 0; }

int bf_dataset_causes(const bf_dataset* d, int individual) {
    if (!d) return 0;
    return individual == 1 ? d->data.l1 : d->data.l2;
}

bf_status bf_dataset_write_csv(const bf_dataset* d, const char* path) {
    return wrap([&] {
        if (!d || !path) throw Error(ErrorCode::invalid_argument, "null argument");
        write_dataset_csv(d->data, path);
    });
}

bf_status bf_log_likelihood(const bf_model* m, const bf_dataset* d, double* out) {
    return wrap([&] {
        if (!m || !d || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = log_likelihood(m->cfg.spec, d->data, m->cfg.fit.likelihood_rel_tol).value;
    });
}

bf_status bf_fit(const bf_model* m, const bf_dataset* d, bf_fit_result** out) {
    return wrap([&] {
        if (!m || !d || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = new bf_fit_result{fit(d->data, m->cfg.spec, m->cfg.fit)};
    });
}

void bf_fit_result_free(bf_fit_result* r) { delete r; }

double bf_fit_result_loglik(const bf_fit_result* r) { return r->res.loglik; }
double bf_fit_result_aic(const bf_fit_result* r) { return r->res.aic; }
int bf_fit_result_converged(const bf_fit_result* r) { return r->res.converged ? 1 : 0; }
int bf_fit_result_param_count(const bf_fit_result* r) { return (int)r->res.mle.size(); }

const char* bf_fit_result_param_name(const bf_fit_result* r, int i) {
    if (!r || i < 0 || i >= (int)r->res.names.size()) return nullptr;
    return r->res.names[i].c_str();
}

double bf_fit_result_estimate(const bf_fit_result* r, int i) { return r->res.mle[i]; }
int bf_fit_result_has_se(const bf_fit_result* r) { return r->res.hessian_pd ? 1 : 0; }

double bf_fit_result_se(const bf_fit_result* r, int i) {
    if (!r->res.hessian_pd) return std::nan("");
    return r->res.se[i];
}

bf_status bf_fit_result_write_json(const bf_fit_result* r, const bf_model* m,
                                   const char* data_path, const bf_dataset* d,
                                   const char* out_path) {
    return wrap([&] {
        if (!r || !m || !d || !out_path) throw Error(ErrorCode::invalid_argument, "null argument");
        write_fit_result_json(r->res, m->cfg.echo, data_path ? data_path : "",
                              d->data.observations.size(), out_path);
    });
}

bf_status bf_likelihood_ratio_test(double loglik_full, double loglik_restricted, int df,
                                   double* statistic, double* p_value) {
    return wrap([&] {
        if (!statistic || !p_value) throw Error(ErrorCode::invalid_argument, "null argument");
        auto r = likelihood_ratio_test(loglik_full, loglik_restricted, df);
        *statistic = r.statistic;
        *p_value = r.p_value;
    });
}

bf_status bf_sim_config_read(const char* path, bf_sim_config** out) {
    return wrap([&] {
        if (!path || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = new bf_sim_config{read_sim_config(path)};
    });
}

void bf_sim_config_free(bf_sim_config* c) { delete c; }

bf_status bf_solve_monitoring_rate(const bf_model* m, double p_cen, double* mu_out) {
    return wrap([&] {
        if (!m || !mu_out) throw Error(ErrorCode::invalid_argument, "null argument");
        *mu_out = solve_monitoring_rate(m->cfg.spec, p_cen);
    });
}

bf_status bf_run_study(const bf_sim_config* c, bf_sim_summary** out) {
    return wrap([&] {
        if (!c || !out) throw Error(ErrorCode::invalid_argument, "null argument");
        *out = new bf_sim_summary{run_study(c->cfg.config)};
    });
}

void bf_sim_summary_free(bf_sim_summary* s) { delete s; }

bf_status bf_sim_summary_write_csv(const bf_sim_summary* s, const char* path) {
    return wrap([&] {
        if (!s || !path) throw Error(ErrorCode::invalid_argument, "null argument");
        write_sim_summary_csv(s->summary, path);
    });
}

bf_status bf_sim_summary_write_json(const bf_sim_summary* s, const bf_sim_config* c,
                                    const char* path) {
    return wrap([&] {
        if (!s || !c || !path) throw Error(ErrorCode::invalid_argument, "null argument");
        write_sim_summary_json(s->summary, c->cfg.echo, path);
    });
}

}  // extern "C"
