#include "frailty.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"
#include "quadrature.hpp"

namespace bifrail {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::invalid_argument, msg); }

void check_cause(const ModelSpec& spec, int k, int j) {
    if (k != 1 && k != 2) invalid("individual index must be 1 or 2");
    if (j < 1 || j > spec.causes(k))
        invalid("cause index out of range: j=" + std::to_string(j) + " for individual " +
                std::to_string(k));
}

// Per-axis hazard values at one time point. clamped marks cumulative-hazard
// saturation; densities vanish there and callers must zero their cells (the
// unclamped log h would otherwise unbalance the log-space expressions).
struct AxisVals {
    double H[kMaxCauses] = {0, 0, 0, 0};
    double logh[kMaxCauses] = {0, 0, 0, 0};
    double Htot = 0.0;
    bool clamped = false;
};

void axis_vals(const ModelSpec& spec, int k, double t, bool rates, AxisVals& out) {
    const int L = spec.causes(k);
    out.Htot = 0.0;
    out.clamped = false;
    for (int j = 0; j < L; ++j) {
        const HazardSpec& h = spec.hazard(k, j + 1);
        out.H[j] = (t == 0.0) ? 0.0 : cumulative_hazard_clamped(h, t);
        out.Htot += out.H[j];
        if (out.H[j] >= kHazardClampValue) out.clamped = true;
        if (rates) out.logh[j] = log_hazard_rate(h, t);
    }
}

// value = sign * exp(log_abs); sign can be -1 only for infeasible
// (evaluation-only) rho where the bracket terms go negative.
struct SignedLog {
    double log_abs;
    double sign;
};

SignedLog signed_log(double linear, double log_scale) {
    if (linear > 0.0) return {log_scale + std::log(linear), 1.0};
    if (linear < 0.0) return {log_scale + std::log(-linear), -1.0};
    return {kNegInf, 1.0};
}

struct CorrPieces {
    double q, kap1, kap2;
    double A, B1, B2;
    double logS;  // contribution of this frailty pair to ln S
};

CorrPieces corr_pieces(double s1, double s2, double rho, double H1, double H2) {
    CorrPieces p;
    p.q = rho / (s1 * s2);
    p.kap1 = 1.0 / (s1 * s1) - p.q;
    p.kap2 = 1.0 / (s2 * s2) - p.q;
    const double x1 = s1 * s1 * H1, x2 = s2 * s2 * H2;
    p.A = 1.0 + x1 + x2;
    p.B1 = 1.0 + x1;
    p.B2 = 1.0 + x2;
    p.logS = -p.q * std::log1p(x1 + x2) - p.kap1 * std::log1p(x1) - p.kap2 * std::log1p(x2);
    return p;
}

double log_survival_kernel(const ModelSpec& spec, const AxisVals& a1, const AxisVals& a2) {
    switch (frailty_variant(spec.frailty)) {
        case FrailtyVariant::shared: {
            const double s2 = std::pow(std::get<SharedFrailty>(spec.frailty).sigma, 2);
            return -std::log1p(s2 * (a1.Htot + a2.Htot)) / s2;
        }
        case FrailtyVariant::correlated: {
            const auto& f = std::get<CorrelatedFrailty>(spec.frailty);
            return corr_pieces(f.sigma1, f.sigma2, f.rho, a1.Htot, a2.Htot).logS;
        }
        case FrailtyVariant::shared_cause_specific: {
            const auto& f = std::get<SharedCauseSpecificFrailty>(spec.frailty);
            double ls = 0.0;
            for (int j = 0; j < spec.l1; ++j) {
                const double s2 = f.sigmas[j] * f.sigmas[j];
                ls -= std::log1p(s2 * (a1.H[j] + a2.H[j])) / s2;
            }
            return ls;
        }
        case FrailtyVariant::correlated_cause_specific: {
            const auto& f = std::get<CorrelatedCauseSpecificFrailty>(spec.frailty);
            double ls = 0.0;
            for (int j = 0; j < spec.l1; ++j) {
                const auto& c = f.causes[j];
                ls += corr_pieces(c.sigma1, c.sigma2, c.rho, a1.H[j], a2.H[j]).logS;
            }
            return ls;
        }
    }
    invalid("unknown frailty variant");
}

// E[eps^{(k)}_j exp(-<eps,H>)], j 0-based.
SignedLog one_factor_kernel(const ModelSpec& spec, int k, int j, const AxisVals& a1,
                            const AxisVals& a2) {
    switch (frailty_variant(spec.frailty)) {
        case FrailtyVariant::shared: {
            const double s2 = std::pow(std::get<SharedFrailty>(spec.frailty).sigma, 2);
            return {-(1.0 + 1.0 / s2) * std::log1p(s2 * (a1.Htot + a2.Htot)), 1.0};
        }
        case FrailtyVariant::correlated: {
            const auto& f = std::get<CorrelatedFrailty>(spec.frailty);
            CorrPieces p = corr_pieces(f.sigma1, f.sigma2, f.rho, a1.Htot, a2.Htot);
            const double sk2 = (k == 1) ? f.sigma1 * f.sigma1 : f.sigma2 * f.sigma2;
            const double lin = (k == 1) ? p.q / p.A + p.kap1 / p.B1 : p.q / p.A + p.kap2 / p.B2;
            return signed_log(lin, std::log(sk2) + p.logS);
        }
        case FrailtyVariant::shared_cause_specific: {
            const auto& f = std::get<SharedCauseSpecificFrailty>(spec.frailty);
            double ls = 0.0;
            for (int jj = 0; jj < spec.l1; ++jj) {
                const double s2 = f.sigmas[jj] * f.sigmas[jj];
                ls -= std::log1p(s2 * (a1.H[jj] + a2.H[jj])) / s2;
            }
            const double sj2 = f.sigmas[j] * f.sigmas[j];
            return {ls - std::log1p(sj2 * (a1.H[j] + a2.H[j])), 1.0};
        }
        case FrailtyVariant::correlated_cause_specific: {
            const auto& f = std::get<CorrelatedCauseSpecificFrailty>(spec.frailty);
            double ls = 0.0;
            for (int jj = 0; jj < spec.l1; ++jj) {
                const auto& c = f.causes[jj];
                ls += corr_pieces(c.sigma1, c.sigma2, c.rho, a1.H[jj], a2.H[jj]).logS;
            }
            const auto& c = f.causes[j];
            CorrPieces p = corr_pieces(c.sigma1, c.sigma2, c.rho, a1.H[j], a2.H[j]);
            const double sk2 = (k == 1) ? c.sigma1 * c.sigma1 : c.sigma2 * c.sigma2;
            const double lin = (k == 1) ? p.q / p.A + p.kap1 / p.B1 : p.q / p.A + p.kap2 / p.B2;
            return signed_log(lin, std::log(sk2) + ls);
        }
    }
    invalid("unknown frailty variant");
}

// E[eps^{(1)}_{j1} eps^{(2)}_{j2} exp(-<eps,H>)] for all (j1,j2), row-major in j1.
void two_factor_matrix(const ModelSpec& spec, const AxisVals& a1, const AxisVals& a2,
                       SignedLog* out) {
    const int L1 = spec.l1, L2 = spec.l2;
    switch (frailty_variant(spec.frailty)) {
        case FrailtyVariant::shared: {
            const double s2 = std::pow(std::get<SharedFrailty>(spec.frailty).sigma, 2);
            const double v = std::log1p(s2) - (2.0 + 1.0 / s2) * std::log1p(s2 * (a1.Htot + a2.Htot));
            for (int c = 0; c < L1 * L2; ++c) out[c] = {v, 1.0};
            return;
        }
        case FrailtyVariant::correlated: {
            const auto& f = std::get<CorrelatedFrailty>(spec.frailty);
            CorrPieces p = corr_pieces(f.sigma1, f.sigma2, f.rho, a1.Htot, a2.Htot);
            const double br = p.q * (p.q + 1.0) / (p.A * p.A) + p.q * p.kap1 / (p.A * p.B1) +
                              p.q * p.kap2 / (p.A * p.B2) + p.kap1 * p.kap2 / (p.B1 * p.B2);
            const double ls = std::log(f.sigma1 * f.sigma1) + std::log(f.sigma2 * f.sigma2) + p.logS;
            SignedLog v = signed_log(br, ls);
            for (int c = 0; c < L1 * L2; ++c) out[c] = v;
            return;
        }
        case FrailtyVariant::shared_cause_specific: {
            const auto& f = std::get<SharedCauseSpecificFrailty>(spec.frailty);
            double ls = 0.0;
            double lb[kMaxCauses];  // log(1 + sigma_j^2 s_j)
            for (int j = 0; j < L1; ++j) {
                const double s2 = f.sigmas[j] * f.sigmas[j];
                lb[j] = std::log1p(s2 * (a1.H[j] + a2.H[j]));
                ls -= lb[j] / s2;
            }
            for (int j1 = 0; j1 < L1; ++j1)
                for (int j2 = 0; j2 < L2; ++j2) {
                    double v;
                    if (j1 == j2) {
                        const double s2 = f.sigmas[j1] * f.sigmas[j1];
                        v = std::log1p(s2) - 2.0 * lb[j1] + ls;
                    } else {
                        v = -lb[j1] - lb[j2] + ls;
                    }
                    out[j1 * L2 + j2] = {v, 1.0};
                }
            return;
        }
        case FrailtyVariant::correlated_cause_specific: {
            const auto& f = std::get<CorrelatedCauseSpecificFrailty>(spec.frailty);
            double ls = 0.0;
            CorrPieces pc[kMaxCauses];
            for (int j = 0; j < L1; ++j) {
                const auto& c = f.causes[j];
                pc[j] = corr_pieces(c.sigma1, c.sigma2, c.rho, a1.H[j], a2.H[j]);
                ls += pc[j].logS;
            }
            for (int j1 = 0; j1 < L1; ++j1)
                for (int j2 = 0; j2 < L2; ++j2) {
                    const double s12 = f.causes[j1].sigma1 * f.causes[j1].sigma1;
                    const double s22 = f.causes[j2].sigma2 * f.causes[j2].sigma2;
                    double lin;
                    if (j1 == j2) {
                        const CorrPieces& p = pc[j1];
                        lin = p.q * (p.q + 1.0) / (p.A * p.A) + p.q * p.kap1 / (p.A * p.B1) +
                              p.q * p.kap2 / (p.A * p.B2) + p.kap1 * p.kap2 / (p.B1 * p.B2);
                    } else {
                        const CorrPieces& pa = pc[j1];
                        const CorrPieces& pb = pc[j2];
                        lin = (pa.q / pa.A + pa.kap1 / pa.B1) * (pb.q / pb.A + pb.kap2 / pb.B2);
                    }
                    out[j1 * L2 + j2] = signed_log(lin, std::log(s12) + std::log(s22) + ls);
                }
            return;
        }
    }
    invalid("unknown frailty variant");
}

// p >= 1 such that u = w^p removes the worst t^(gamma-1) singularity on axis k
double axis_power(const ModelSpec& spec, int k) {
    double gmin = 1.0;
    for (int j = 1; j <= spec.causes(k); ++j) gmin = std::min(gmin, spec.hazard(k, j).gamma);
    return 1.0 / gmin;
}

double log_jacobian(double p, double w) {
    if (p == 1.0) return 0.0;
    return std::log(p) + (p - 1.0) * std::log(w);
}

bool fast_closed_form(const ModelSpec& spec) {
    FrailtyVariant v = frailty_variant(spec.frailty);
    return (v == FrailtyVariant::shared || v == FrailtyVariant::correlated) &&
           all_hazards_exponential(spec);
}

double alpha_total(const ModelSpec& spec, int k) {
    double a = 0.0;
    for (int j = 1; j <= spec.causes(k); ++j) a += spec.hazard(k, j).alpha;
    return a;
}

// 1 - S1 - S2 + S for the exponential closed form, arranged to avoid the
// small-t cancellation; returns a negative value if precision ran out (the
// caller falls back to quadrature).
double incl_excl_factor(const ModelSpec& spec, double t1, double t2) {
    AxisVals a1, a2, z;
    axis_vals(spec, 1, t1, false, a1);
    axis_vals(spec, 2, t2, false, a2);
    const double l1 = log_survival_kernel(spec, a1, z);
    const double l2 = log_survival_kernel(spec, z, a2);
    const double l12 = log_survival_kernel(spec, a1, a2);
    // (1 - S1) - (S2 - S) = -expm1(l1) + e^{l2} expm1(l12 - l2)
    return -std::expm1(l1) + std::exp(l2) * std::expm1(l12 - l2);
}

// general-path quadrature of all density cells over (0,t1) x (0,t2);
// weights selects the error-control combination (all-ones for matrices).
void distribution_matrix_quad(const ModelSpec& spec, double t1, double t2, double rel_tol,
                              const double* weights, double* out) {
    const int L1 = spec.l1, L2 = spec.l2, n = L1 * L2;
    const double p1 = axis_power(spec, 1), p2 = axis_power(spec, 2);
    auto integrand = [&](double w1, double w2, double* cells) {
        const double u1 = (p1 == 1.0) ? w1 : std::pow(w1, p1);
        const double u2 = (p2 == 1.0) ? w2 : std::pow(w2, p2);
        AxisVals a1, a2;
        axis_vals(spec, 1, u1, true, a1);
        axis_vals(spec, 2, u2, true, a2);
        if (a1.clamped || a2.clamped) {
            for (int c = 0; c < L1 * L2; ++c) cells[c] = 0.0;
            return;
        }
        SignedLog tf[kMaxCauses * kMaxCauses];
        two_factor_matrix(spec, a1, a2, tf);
        const double lj = log_jacobian(p1, w1) + log_jacobian(p2, w2);
        for (int j1 = 0; j1 < L1; ++j1)
            for (int j2 = 0; j2 < L2; ++j2) {
                const SignedLog& v = tf[j1 * L2 + j2];
                cells[j1 * L2 + j2] =
                    v.sign * std::exp(a1.logh[j1] + a2.logh[j2] + v.log_abs + lj);
            }
    };
    const double w1hi = (p1 == 1.0) ? t1 : std::pow(t1, 1.0 / p1);
    const double w2hi = (p2 == 1.0) ? t2 : std::pow(t2, 1.0 / p2);
    // reuse the generic 2d driver with the transformed rectangle
    auto f2 = [&](double w1, double w2, double* cells) { integrand(w1, w2, cells); };
    integrate_2d_vec(f2, n, weights, w1hi, w2hi, rel_tol, out);
}

}  // namespace

FrailtyVariant frailty_variant(const FrailtySpec& frailty) {
    return static_cast<FrailtyVariant>(frailty.index());
}

const char* frailty_variant_name(FrailtyVariant variant) {
    switch (variant) {
        case FrailtyVariant::shared: return "shared";
        case FrailtyVariant::correlated: return "correlated";
        case FrailtyVariant::shared_cause_specific: return "shared-cause-specific";
        case FrailtyVariant::correlated_cause_specific: return "correlated-cause-specific";
    }
    return "?";
}

bool all_hazards_exponential(const ModelSpec& spec) {
    for (const auto& h : spec.hazards1)
        if (h.family != HazardFamily::exponential) return false;
    for (const auto& h : spec.hazards2)
        if (h.family != HazardFamily::exponential) return false;
    return true;
}

void validate_model(const ModelSpec& spec, ValidationMode mode) {
    if (spec.l1 < 1 || spec.l1 > kMaxCauses || spec.l2 < 1 || spec.l2 > kMaxCauses)
        invalid("cause counts must be in 1.." + std::to_string(kMaxCauses));
    if ((int)spec.hazards1.size() != spec.l1 || (int)spec.hazards2.size() != spec.l2)
        invalid("hazard table sizes must match the declared cause counts");
    for (int k = 1; k <= 2; ++k)
        for (int j = 1; j <= spec.causes(k); ++j)
            if (auto v = validate_hazard_params(spec.hazard(k, j)))
                invalid("hazard(" + std::to_string(k) + "," + std::to_string(j) + ") " + v->field +
                        ": " + v->message);

    auto check_sigma = [&](double s, const std::string& name) {
        if (!(s > 0.0) || !std::isfinite(s)) invalid(name + " must be > 0 and finite");
    };
    auto check_triple = [&](double s1, double s2, double rho, const std::string& name) {
        check_sigma(s1, name + ".sigma1");
        check_sigma(s2, name + ".sigma2");
        if (!(rho > 0.0) || !std::isfinite(rho)) invalid(name + ".rho must be > 0 and finite");
        if (mode == ValidationMode::strict) {
            const double bound = std::min(s1 / s2, s2 / s1);
            if (!(rho < bound))
                invalid(name + ".rho must be < min(sigma1/sigma2, sigma2/sigma1) = " +
                        std::to_string(bound));
        }
    };
    const FrailtyVariant v = frailty_variant(spec.frailty);
    const bool cause_specific = v == FrailtyVariant::shared_cause_specific ||
                                v == FrailtyVariant::correlated_cause_specific;
    if (cause_specific && spec.l1 != spec.l2)
        invalid("cause-specific frailty variants require L1 == L2");
    switch (v) {
        case FrailtyVariant::shared:
            check_sigma(std::get<SharedFrailty>(spec.frailty).sigma, "sigma");
            break;
        case FrailtyVariant::correlated: {
            const auto& f = std::get<CorrelatedFrailty>(spec.frailty);
            check_triple(f.sigma1, f.sigma2, f.rho, "frailty");
            break;
        }
        case FrailtyVariant::shared_cause_specific: {
            const auto& f = std::get<SharedCauseSpecificFrailty>(spec.frailty);
            if ((int)f.sigmas.size() != spec.l1) invalid("need exactly L frailty sigmas");
            for (int j = 0; j < spec.l1; ++j)
                check_sigma(f.sigmas[j], "sigma[" + std::to_string(j + 1) + "]");
            break;
        }
        case FrailtyVariant::correlated_cause_specific: {
            const auto& f = std::get<CorrelatedCauseSpecificFrailty>(spec.frailty);
            if ((int)f.causes.size() != spec.l1) invalid("need exactly L frailty triples");
            for (int j = 0; j < spec.l1; ++j)
                check_triple(f.causes[j].sigma1, f.causes[j].sigma2, f.causes[j].rho,
                             "frailty[" + std::to_string(j + 1) + "]");
            break;
        }
    }
    if (spec.tie_correlated_sigmas && v != FrailtyVariant::correlated &&
        v != FrailtyVariant::correlated_cause_specific)
        invalid("tie_correlated_sigmas applies only to correlated variants");
}

ReparamCorrelated correlated_reparam(double sigma1, double sigma2, double rho) {
    ModelSpec probe;  // reuse the triple check
    probe.hazards1 = {HazardSpec{}};
    probe.hazards2 = {HazardSpec{}};
    probe.frailty = CorrelatedFrailty{sigma1, sigma2, rho};
    validate_model(probe, ValidationMode::strict);
    ReparamCorrelated r;
    r.kappa0 = rho / (sigma1 * sigma2);
    r.mu1 = 1.0 / (sigma1 * sigma1);
    r.mu2 = 1.0 / (sigma2 * sigma2);
    r.kappa1 = r.mu1 - r.kappa0;
    r.kappa2 = r.mu2 - r.kappa0;
    return r;
}

CorrelatedFrailty correlated_reparam_inverse(const ReparamCorrelated& rep) {
    if (!(rep.kappa0 > 0.0) || !(rep.kappa1 > 0.0) || !(rep.kappa2 > 0.0))
        invalid("kappa parameters must be positive");
    CorrelatedFrailty f;
    f.sigma1 = 1.0 / std::sqrt(rep.kappa0 + rep.kappa1);
    f.sigma2 = 1.0 / std::sqrt(rep.kappa0 + rep.kappa2);
    f.rho = rep.kappa0 / (std::sqrt(rep.kappa0 + rep.kappa1) * std::sqrt(rep.kappa0 + rep.kappa2));
    return f;
}

double joint_survival(const ModelSpec& spec, double t1, double t2) {
    if (!(t1 >= 0.0) || !(t2 >= 0.0)) invalid("joint_survival: times must be >= 0");
    AxisVals a1, a2;
    axis_vals(spec, 1, t1, false, a1);
    axis_vals(spec, 2, t2, false, a2);
    return std::exp(log_survival_kernel(spec, a1, a2));
}

double marginal_survival(const ModelSpec& spec, int k, double t) {
    if (k != 1 && k != 2) invalid("individual index must be 1 or 2");
    return (k == 1) ? joint_survival(spec, t, 0.0) : joint_survival(spec, 0.0, t);
}

void joint_sub_density_matrix(const ModelSpec& spec, double t1, double t2, double* out) {
    if (!(t1 > 0.0) || !(t2 > 0.0))
        invalid("joint_sub_density: times must be > 0 (density lives on the open orthant)");
    AxisVals a1, a2;
    axis_vals(spec, 1, t1, true, a1);
    axis_vals(spec, 2, t2, true, a2);
    if (a1.clamped || a2.clamped) {
        for (int c = 0; c < spec.l1 * spec.l2; ++c) out[c] = 0.0;
        return;
    }
    SignedLog tf[kMaxCauses * kMaxCauses];
    two_factor_matrix(spec, a1, a2, tf);
    for (int j1 = 0; j1 < spec.l1; ++j1)
        for (int j2 = 0; j2 < spec.l2; ++j2) {
            const SignedLog& v = tf[j1 * spec.l2 + j2];
            const double lv = a1.logh[j1] + a2.logh[j2] + v.log_abs;
            if (lv > 700.0)
                throw Error(ErrorCode::domain_overflow, "joint_sub_density overflow");
            out[j1 * spec.l2 + j2] = v.sign * std::exp(lv);
        }
}

double joint_sub_density(const ModelSpec& spec, int j1, int j2, double t1, double t2) {
    check_cause(spec, 1, j1);
    check_cause(spec, 2, j2);
    double cells[kMaxCauses * kMaxCauses];
    joint_sub_density_matrix(spec, t1, t2, cells);
    return cells[(j1 - 1) * spec.l2 + (j2 - 1)];
}

void joint_sub_distribution_matrix(const ModelSpec& spec, double t1, double t2, double rel_tol,
                                   double* out) {
    const int n = spec.l1 * spec.l2;
    if (t1 == 0.0 || t2 == 0.0) {
        for (int c = 0; c < n; ++c) out[c] = 0.0;
        return;
    }
    if (!(t1 > 0.0) || !(t2 > 0.0)) invalid("joint_sub_distribution: times must be >= 0");
    if (fast_closed_form(spec)) {
        const double fac = incl_excl_factor(spec, t1, t2);
        const double a1 = alpha_total(spec, 1), a2 = alpha_total(spec, 2);
        // fall back to quadrature when the inclusion-exclusion form lost
        // precision (tiny t); cheap there because the integrand is small
        if (fac > 1e-12) {
            for (int j1 = 0; j1 < spec.l1; ++j1)
                for (int j2 = 0; j2 < spec.l2; ++j2)
                    out[j1 * spec.l2 + j2] = spec.hazard(1, j1 + 1).alpha / a1 *
                                             (spec.hazard(2, j2 + 1).alpha / a2) * fac;
            return;
        }
    }
    double weights[kQuadMaxComponents];
    for (int c = 0; c < n; ++c) weights[c] = 1.0;
    distribution_matrix_quad(spec, t1, t2, rel_tol, weights, out);
}

double joint_sub_distribution(const ModelSpec& spec, int j1, int j2, double t1, double t2,
                              double rel_tol) {
    check_cause(spec, 1, j1);
    check_cause(spec, 2, j2);
    if (t1 == 0.0 || t2 == 0.0) return 0.0;
    if (!(t1 > 0.0) || !(t2 > 0.0)) invalid("joint_sub_distribution: times must be >= 0");
    if (fast_closed_form(spec)) {
        const double fac = incl_excl_factor(spec, t1, t2);
        if (fac > 1e-12)
            return spec.hazard(1, j1).alpha / alpha_total(spec, 1) *
                   (spec.hazard(2, j2).alpha / alpha_total(spec, 2)) * fac;
    }
    double weights[kQuadMaxComponents] = {0};
    weights[(j1 - 1) * spec.l2 + (j2 - 1)] = 1.0;
    double cells[kQuadMaxComponents];
    distribution_matrix_quad(spec, t1, t2, rel_tol, weights, cells);
    return cells[(j1 - 1) * spec.l2 + (j2 - 1)];
}

double censored_one_failed(const ModelSpec& spec, int k, int j, double t, double x_other,
                           double rel_tol) {
    check_cause(spec, k, j);
    if (!(t >= 0.0) || !(x_other >= 0.0)) invalid("censored_one_failed: times must be >= 0");
    if (t == 0.0) return 0.0;
    const int other = (k == 1) ? 2 : 1;
    if (fast_closed_form(spec)) {
        AxisVals af, ao, z;
        axis_vals(spec, k, t, false, af);
        axis_vals(spec, other, x_other, false, ao);
        const AxisVals& a1o = (k == 1) ? z : ao;
        const AxisVals& a2o = (k == 1) ? ao : z;
        const double lo = log_survival_kernel(spec, a1o, a2o);  // ln S_other(x_other)
        const AxisVals& a1b = (k == 1) ? af : ao;
        const AxisVals& a2b = (k == 1) ? ao : af;
        const double lb = log_survival_kernel(spec, a1b, a2b);  // ln S(t, x_other)
        const double w = spec.hazard(k, j).alpha / alpha_total(spec, k);
        return w * (-std::exp(lo) * std::expm1(lb - lo));
    }
    AxisVals aother;
    axis_vals(spec, other, x_other, false, aother);
    const HazardSpec& hz = spec.hazard(k, j);
    const double p = 1.0 / std::min(1.0, hz.gamma);
    auto integrand = [&](double w) {
        const double u = (p == 1.0) ? w : std::pow(w, p);
        AxisVals af;
        axis_vals(spec, k, u, false, af);
        if (af.clamped || aother.clamped) return 0.0;
        SignedLog of = (k == 1) ? one_factor_kernel(spec, 1, j - 1, af, aother)
                                : one_factor_kernel(spec, 2, j - 1, aother, af);
        return of.sign *
               std::exp(log_hazard_rate(hz, u) + of.log_abs + log_jacobian(p, w));
    };
    const double whi = (p == 1.0) ? t : std::pow(t, 1.0 / p);
    return integrate_1d(integrand, 0.0, whi, rel_tol).value;
}

double marginal_sub_distribution(const ModelSpec& spec, int k, int j, double t, double rel_tol) {
    return censored_one_failed(spec, k, j, t, 0.0, rel_tol);
}

double cross_ratio(const ModelSpec& spec, int j1, int j2, double t1, double t2, double rel_tol) {
    check_cause(spec, 1, j1);
    check_cause(spec, 2, j2);
    if (!(t1 > 0.0) || !(t2 > 0.0)) invalid("cross_ratio: times must be > 0");
    if (frailty_variant(spec.frailty) == FrailtyVariant::shared) {
        const double s = std::get<SharedFrailty>(spec.frailty).sigma;
        return 1.0 + s * s;
    }
    AxisVals a1, a2;
    axis_vals(spec, 1, t1, true, a1);
    axis_vals(spec, 2, t2, true, a2);
    const double logS = log_survival_kernel(spec, a1, a2);
    SignedLog tf[kMaxCauses * kMaxCauses];
    two_factor_matrix(spec, a1, a2, tf);
    const SignedLog& cell = tf[(j1 - 1) * spec.l2 + (j2 - 1)];
    const double numer =
        cell.sign * std::exp(logS + a1.logh[j1 - 1] + a2.logh[j2 - 1] + cell.log_abs);

    // tail over u1 >= t1 of sum_j f_{j j2}(u1, t2)
    auto tail_u1 = [&](double u) {
        AxisVals au;
        axis_vals(spec, 1, u, true, au);
        if (au.clamped || a2.clamped) return 0.0;
        SignedLog m[kMaxCauses * kMaxCauses];
        two_factor_matrix(spec, au, a2, m);
        double s = 0.0;
        for (int j = 0; j < spec.l1; ++j) {
            const SignedLog& v = m[j * spec.l2 + (j2 - 1)];
            s += v.sign * std::exp(au.logh[j] + a2.logh[j2 - 1] + v.log_abs);
        }
        return s;
    };
    auto tail_u2 = [&](double u) {
        AxisVals au;
        axis_vals(spec, 2, u, true, au);
        if (au.clamped || a1.clamped) return 0.0;
        SignedLog m[kMaxCauses * kMaxCauses];
        two_factor_matrix(spec, a1, au, m);
        double s = 0.0;
        for (int j = 0; j < spec.l2; ++j) {
            const SignedLog& v = m[(j1 - 1) * spec.l2 + j];
            s += v.sign * std::exp(a1.logh[j1 - 1] + au.logh[j] + v.log_abs);
        }
        return s;
    };
    const double d1 = integrate_semi_infinite(tail_u1, t1, rel_tol).value;
    const double d2 = integrate_semi_infinite(tail_u2, t2, rel_tol).value;
    if (std::fabs(d1) < 1e-300 || std::fabs(d2) < 1e-300)
        throw Error(ErrorCode::unstable_point,
                    "cross_ratio: tail integral underflow at (t1,t2) = (" + std::to_string(t1) +
                        ", " + std::to_string(t2) + ")");
    return numer / (d1 * d2);
}

}  // namespace bifrail
