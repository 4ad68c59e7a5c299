#include "hazard.hpp"

#include <cmath>

#include "errors.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace bifrail {

namespace {

constexpr double kExpGuard = 700.0;

[[noreturn]] void overflow_at(double t) {
    throw Error(ErrorCode::domain_overflow,
                "hazard evaluation overflow at t = " + std::to_string(t));
}

void require_valid(const HazardSpec& spec) {
    if (auto v = validate_hazard_params(spec))
        throw Error(ErrorCode::invalid_argument, v->field + ": " + v->message);
}

}  // namespace

const char* hazard_family_name(HazardFamily family) {
    switch (family) {
        case HazardFamily::exponential: return "exponential";
        case HazardFamily::weibull: return "weibull";
        case HazardFamily::gamma: return "gamma";
        case HazardFamily::loglogistic: return "loglogistic";
        case HazardFamily::weibull_gompertz: return "weibull-gompertz";
    }
    return "?";
}

std::optional<HazardFamily> hazard_family_from_name(std::string_view name) {
    if (name == "exponential") return HazardFamily::exponential;
    if (name == "weibull") return HazardFamily::weibull;
    if (name == "gamma") return HazardFamily::gamma;
    if (name == "loglogistic") return HazardFamily::loglogistic;
    if (name == "weibull-gompertz") return HazardFamily::weibull_gompertz;
    return std::nullopt;
}

std::optional<ParamViolation> validate_hazard_params(const HazardSpec& spec) {
    if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma))
        return ParamViolation{"gamma", "must be > 0 and finite"};
    if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
        return ParamViolation{"alpha", "must be > 0 and finite"};
    if (spec.family == HazardFamily::exponential && spec.gamma != 1.0)
        return ParamViolation{"gamma", "fixed to 1 for the exponential family"};
    return std::nullopt;
}

double log_hazard_rate(const HazardSpec& spec, double t) {
    require_valid(spec);
    if (!(t > 0.0)) throw Error(ErrorCode::invalid_argument, "hazard_rate: t must be > 0");
    const double g = spec.gamma, a = spec.alpha;
    switch (spec.family) {
        case HazardFamily::exponential:
            return std::log(a);
        case HazardFamily::weibull:
            return g * std::log(a) + std::log(g) + (g - 1.0) * std::log(t);
        case HazardFamily::gamma:
            // a^g t^(g-1) e^(-ta) / integral_{ta}^inf e^-y y^(g-1) dy
            return g * std::log(a) + (g - 1.0) * std::log(t) - t * a - std::lgamma(g) -
                   log_gamma_q(g, t * a);
        case HazardFamily::loglogistic:
            return g * std::log(a) + std::log(g) + (g - 1.0) * std::log(t) -
                   std::log1p(std::pow(t * a, g));
        case HazardFamily::weibull_gompertz:
            return std::log(g) + g * std::log(a) + (g - 1.0) * std::log(t) + a * t;
    }
    throw Error(ErrorCode::invalid_argument, "unknown hazard family");
}

double hazard_rate(const HazardSpec& spec, double t) {
    double lh = log_hazard_rate(spec, t);
    if (lh > kExpGuard) overflow_at(t);
    double h = std::exp(lh);
    if (!std::isfinite(h)) overflow_at(t);
    return h;
}

namespace {

double cumulative_hazard_impl(const HazardSpec& spec, double t, bool clamped) {
    require_valid(spec);
    if (!(t >= 0.0)) throw Error(ErrorCode::invalid_argument, "cumulative_hazard: t must be >= 0");
    if (t == 0.0) return 0.0;
    const double g = spec.gamma, a = spec.alpha;
    auto guard = [&](double log_h) -> double {
        if (log_h > std::log(kHazardClampValue)) {
            if (clamped) return kHazardClampValue;
            overflow_at(t);
        }
        return std::exp(log_h);
    };
    switch (spec.family) {
        case HazardFamily::exponential:
            return a * t;
        case HazardFamily::weibull:
            return guard(g * std::log(a * t));
        case HazardFamily::gamma:
            return -log_gamma_q(g, a * t);
        case HazardFamily::loglogistic: {
            double p = g * std::log(a * t);
            if (p > kExpGuard) return p;  // log1p(e^p) ~ p, exact at this magnitude
            return std::log1p(std::exp(p));
        }
        case HazardFamily::weibull_gompertz: {
            // no general closed form: adaptive quadrature of the rate, in the
            // substituted variable w = u^gamma which removes the t^(gamma-1)
            // endpoint singularity (integrand becomes alpha^gamma e^(alpha w^(1/gamma)))
            if (a * t + g * std::log(std::max(a * t, 1e-300)) > 680.0) {
                if (clamped) return kHazardClampValue;
                overflow_at(t);
            }
            const double lga = g * std::log(a);
            auto res = integrate_1d([&](double w) {
                return w <= 0.0 ? std::exp(lga)
                                : std::exp(lga + a * std::pow(w, 1.0 / g));
            }, 0.0, std::pow(t, g), 1e-10);
            return res.value;
        }
    }
    throw Error(ErrorCode::invalid_argument, "unknown hazard family");
}

}  // namespace

double cumulative_hazard(const HazardSpec& spec, double t) {
    return cumulative_hazard_impl(spec, t, false);
}

double cumulative_hazard_clamped(const HazardSpec& spec, double t) {
    double h = cumulative_hazard_impl(spec, t, true);
    return std::min(h, kHazardClampValue);
}

}  // namespace bifrail
