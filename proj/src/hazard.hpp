#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace bifrail {

// Parametric cause-specific baseline hazard class h(t) = a(gamma,alpha) * t^(gamma-1) * b(t).
enum class HazardFamily {
    exponential,
    weibull,
    gamma,
    loglogistic,
    weibull_gompertz,
};

struct HazardSpec {
    HazardFamily family = HazardFamily::exponential;
    double gamma = 1.0;  // shape, dimensionless; fixed to 1 for exponential
    double alpha = 1.0;  // scale, inverse-time units
};

struct ParamViolation {
    std::string field;
    std::string message;
};

const char* hazard_family_name(HazardFamily family);
std::optional<HazardFamily> hazard_family_from_name(std::string_view name);

// ok -> nullopt; otherwise which field violated which bound.
std::optional<ParamViolation> validate_hazard_params(const HazardSpec& spec);

// h(t), t > 0. Throws domain_overflow when an exponent guard (> 700) trips.
double hazard_rate(const HazardSpec& spec, double t);
double log_hazard_rate(const HazardSpec& spec, double t);

// H(t) = int_0^t h(u) du, t >= 0. Closed forms except weibull-gompertz, which
// integrates hazard_rate adaptively at relative tolerance 1e-10.
double cumulative_hazard(const HazardSpec& spec, double t);

// Saturating variant for use inside survival/density kernels: instead of the
// overflow error it returns kHazardClampValue once H exceeds it (the kernels
// only need "astronomically large" there, not the exact magnitude).
inline constexpr double kHazardClampValue = 1e290;
double cumulative_hazard_clamped(const HazardSpec& spec, double t);

}  // namespace bifrail
