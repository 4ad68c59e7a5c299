#pragma once

#include <variant>
#include <vector>

#include "hazard.hpp"

namespace bifrail {

inline constexpr int kMaxCauses = 4;

// The four Gamma frailty dependence structures. Frailties always have mean 1;
// sigma is the frailty standard deviation, rho the correlation of a pair.
struct SharedFrailty {
    double sigma = 1.0;
};
struct CorrelatedFrailty {
    double sigma1 = 1.0, sigma2 = 1.0, rho = 0.5;
};
struct SharedCauseSpecificFrailty {
    std::vector<double> sigmas;  // one per cause, requires L1 == L2
};
struct CorrelatedCauseTriple {
    double sigma1 = 1.0, sigma2 = 1.0, rho = 0.5;
};
struct CorrelatedCauseSpecificFrailty {
    std::vector<CorrelatedCauseTriple> causes;  // one per cause, requires L1 == L2
};

using FrailtySpec = std::variant<SharedFrailty, CorrelatedFrailty, SharedCauseSpecificFrailty,
                                 CorrelatedCauseSpecificFrailty>;

enum class FrailtyVariant { shared, correlated, shared_cause_specific, correlated_cause_specific };

FrailtyVariant frailty_variant(const FrailtySpec& frailty);
const char* frailty_variant_name(FrailtyVariant variant);

// The complete model: cause counts, per-(individual, cause) baseline hazards,
// and the frailty structure.
struct ModelSpec {
    int l1 = 1, l2 = 1;
    std::vector<HazardSpec> hazards1, hazards2;  // cause-indexed, sizes l1 / l2
    FrailtySpec frailty = SharedFrailty{};
    // Fitting constraint sigma1 == sigma2 (per cause for the cause-specific
    // variant); evaluation is unaffected, only parameter packing changes.
    bool tie_correlated_sigmas = false;

    int causes(int k) const { return k == 1 ? l1 : l2; }
    const HazardSpec& hazard(int k, int j) const {  // j is 1-based
        return k == 1 ? hazards1[j - 1] : hazards2[j - 1];
    }
    HazardSpec& hazard(int k, int j) { return k == 1 ? hazards1[j - 1] : hazards2[j - 1]; }
};

// strict enforces rho < min(sigma1/sigma2, sigma2/sigma1) (required for the
// frailty distribution to exist; always used when fitting). evaluation only
// requires positivity, so formula-level cross-ratio grids can still be
// computed for parameter sets with no underlying frailty distribution.
enum class ValidationMode { strict, evaluation };
void validate_model(const ModelSpec& spec, ValidationMode mode = ValidationMode::strict);

// (kappa0, kappa1, kappa2) construction parameters of the correlated pair:
// eps^(k) = (mu0/mu_k) Y0 + Y_k with Y_i ~ Gamma(shape kappa_i, rate mu_i),
// mu_k = kappa0 + kappa_k.
struct ReparamCorrelated {
    double kappa0, kappa1, kappa2, mu1, mu2;
};
ReparamCorrelated correlated_reparam(double sigma1, double sigma2, double rho);
CorrelatedFrailty correlated_reparam_inverse(const ReparamCorrelated& rep);

// ---- model functions (cause indices are 1-based) ----

double joint_survival(const ModelSpec& spec, double t1, double t2);
double marginal_survival(const ModelSpec& spec, int k, double t);

double joint_sub_density(const ModelSpec& spec, int j1, int j2, double t1, double t2);
// all L1 x L2 cells at once (row-major in j1), sharing the common factors
void joint_sub_density_matrix(const ModelSpec& spec, double t1, double t2, double* out);

double joint_sub_distribution(const ModelSpec& spec, int j1, int j2, double t1, double t2,
                              double rel_tol = 1e-8);
void joint_sub_distribution_matrix(const ModelSpec& spec, double t1, double t2, double rel_tol,
                                   double* out);

double marginal_sub_distribution(const ModelSpec& spec, int k, int j, double t,
                                 double rel_tol = 1e-8);

// P[T_k <= t, J_k = j, T_other > x_other]: the single-censored likelihood
// block, computed as a 1D integral (no cancellation); x_other = 0 gives the
// marginal sub-distribution.
double censored_one_failed(const ModelSpec& spec, int k, int j, double t, double x_other,
                           double rel_tol = 1e-8);

// Cross-ratio CR_{j1 j2}(t1,t2): shared variant returns 1 + sigma^2 exactly;
// the others evaluate S*f over the two semi-infinite tail integrals.
double cross_ratio(const ModelSpec& spec, int j1, int j2, double t1, double t2,
                   double rel_tol = 1e-6);

// true when every baseline hazard of both individuals is exponential
bool all_hazards_exponential(const ModelSpec& spec);

}  // namespace bifrail
