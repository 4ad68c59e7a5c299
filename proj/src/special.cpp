#include "special.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace bifrail {

namespace {

// log of the power-series value of P(a,x) = x^a e^-x / Gamma(a) * sum_n x^n / (a(a+1)...(a+n))
double log_gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(sum);
}

// log of Q(a,x) via Lentz continued fraction, valid for x >= a+1.
double log_gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(h);
}

}  // namespace

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x))
        throw Error(ErrorCode::invalid_argument, "gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return std::exp(log_gamma_p_series(a, x));
    return -std::expm1(log_gamma_q_cf(a, x));
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x))
        throw Error(ErrorCode::invalid_argument, "gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return -std::expm1(log_gamma_p_series(a, x));
    return std::exp(log_gamma_q_cf(a, x));
}

double log_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x))
        throw Error(ErrorCode::invalid_argument, "log_gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return std::log1p(-std::exp(log_gamma_p_series(a, x)));
    return log_gamma_q_cf(a, x);
}

double chi_square_upper_tail(double x, int df) {
    if (df < 1) throw Error(ErrorCode::invalid_argument, "chi_square_upper_tail: df must be >= 1");
    if (!(x >= 0.0)) throw Error(ErrorCode::invalid_argument, "chi_square_upper_tail: x must be >= 0");
    return gamma_q(0.5 * df, 0.5 * x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw Error(ErrorCode::invalid_argument, "normal_quantile: p must be in (0,1)");
    // Newton on Phi(z) - p with bisection safeguard; Phi via erfc.
    auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    double lo = -40.0, hi = 40.0, z = 0.0;
    for (int i = 0; i < 200; ++i) {
        double f = cdf(z) - p;
        if (f > 0.0) hi = z; else lo = z;
        double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        double step = (pdf > 0.0) ? f / pdf : 0.0;
        double znew = z - step;
        if (!(znew > lo && znew < hi)) znew = 0.5 * (lo + hi);
        if (std::fabs(znew - z) < 1e-14 * (1.0 + std::fabs(z))) { z = znew; break; }
        z = znew;
    }
    return z;
}

}  // namespace bifrail
