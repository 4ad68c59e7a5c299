#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "likelihood.hpp"

namespace bifrail {

struct FitOptions {
    int max_iterations = 2000;       // simplex iterations per run
    double tolerance = 1e-6;         // simplex diameter in the unconstrained space
    int restarts = 2;                // jittered restarts, keeping the best
    double fd_step = 1e-4;           // relative Hessian step
    std::uint64_t seed = 12345;      // restart jitter stream
    double likelihood_rel_tol = 1e-8;
};

// ---- parameter packing (order: hazards (k=1 then k=2, gamma before alpha,
// gamma omitted for exponential), then frailty parameters) ----

int free_param_count(const ModelSpec& templ);
std::vector<std::string> param_names(const ModelSpec& templ);
std::vector<double> pack_natural(const ModelSpec& spec);
ModelSpec unpack_natural(const ModelSpec& templ, const std::vector<double>& v);

// Positive parameters map through log; each rho through logit of
// rho / min(sigma1/sigma2, sigma2/sigma1). Inverse of forward is the identity.
std::vector<double> to_unconstrained(const ModelSpec& spec);
ModelSpec from_unconstrained(const ModelSpec& templ, const std::vector<double>& z);

struct FitResult {
    ModelSpec model;  // at the MLE
    std::vector<std::string> names;
    std::vector<double> mle;  // natural scale
    std::vector<double> se;   // empty when hessian_pd is false
    double loglik = 0.0;
    double aic = 0.0;
    bool converged = false;
    int iterations = 0;
    long underflow_warnings = 0;
    bool hessian_pd = false;
};

// Derivative-free simplex maximization of the log-likelihood in the
// unconstrained space, with jittered restarts.
FitResult fit(const Dataset& data, const ModelSpec& init, const FitOptions& opts = {});

// Crude-rate initialization: alpha from per-cause event counts over total
// monitoring exposure, shapes at 1, sigmas at 1, rho at half its bound.
ModelSpec default_init(const ModelSpec& templ, const Dataset& data);

struct HessianSE {
    std::vector<double> se;
    bool pd = false;
};

// Central finite-difference Hessian of -loglik on the natural scale at the
// MLE; SE = sqrt(diag(H^-1)) when H is positive definite and well conditioned.
HessianSE hessian_standard_errors(const ModelSpec& at_mle, const Dataset& data,
                                  double fd_step = 1e-4, double rel_tol = 1e-8);

double aic_value(double loglik, int free_params);

struct LrtResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};
LrtResult likelihood_ratio_test(double loglik_full, double loglik_restricted, int df);

// ---- numeric helpers (exposed for the test oracles) ----

// row-major symmetric FD Hessian of f at x with per-coordinate relative steps
std::vector<double> fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x, double rel_step);

// sqrt of the diagonal of H^-1 for symmetric positive definite H with
// condition number below 1e12; nullopt otherwise
std::optional<std::vector<double>> spd_inverse_diag_sqrt(const std::vector<double>& h, int n);

}  // namespace bifrail
