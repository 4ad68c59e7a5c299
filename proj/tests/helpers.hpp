#pragma once

// Shared test utilities: model builders, independent (non-Gauss-Kronrod)
// integration oracles, and a chi-square reference.

#include <cmath>
#include <functional>
#include <vector>

#include "frailty.hpp"
#include "rng.hpp"

namespace testutil {

using bifrail::CorrelatedCauseSpecificFrailty;
using bifrail::CorrelatedCauseTriple;
using bifrail::CorrelatedFrailty;
using bifrail::HazardFamily;
using bifrail::HazardSpec;
using bifrail::ModelSpec;
using bifrail::SharedCauseSpecificFrailty;
using bifrail::SharedFrailty;

struct TestRng {
    bifrail::SplitMix64 rng;
    explicit TestRng(std::uint64_t seed) : rng{bifrail::mix_seed(seed, 0x74657374ULL)} {}
    double unit() { return rng.next_unit(); }
    double uniform(double a, double b) { return a + (b - a) * unit(); }
    int index(int n) { return (int)(unit() * n) % n; }
};

inline std::vector<HazardSpec> exp_hazards(const std::vector<double>& alphas) {
    std::vector<HazardSpec> v;
    for (double a : alphas) v.push_back({HazardFamily::exponential, 1.0, a});
    return v;
}

inline ModelSpec shared_exp_model(double sigma, const std::vector<double>& a1,
                                  const std::vector<double>& a2) {
    ModelSpec m;
    m.l1 = (int)a1.size();
    m.l2 = (int)a2.size();
    m.hazards1 = exp_hazards(a1);
    m.hazards2 = exp_hazards(a2);
    m.frailty = SharedFrailty{sigma};
    return m;
}

// reference shared-frailty study scenario
inline ModelSpec shared_study_spec() { return shared_exp_model(0.95, {2.4, 5.8}, {3.5, 4.5}); }

// reference correlated-frailty study scenario
inline ModelSpec correlated_study_spec() {
    ModelSpec m = shared_exp_model(1.0, {3.0, 2.0}, {2.5, 0.8});
    m.frailty = CorrelatedFrailty{0.9, 0.7, 0.65};
    return m;
}

// reference shared cause-specific study scenario
inline ModelSpec shared_cs_study_spec() {
    ModelSpec m = shared_exp_model(1.0, {7.0, 6.0}, {8.5, 10.0});
    m.frailty = SharedCauseSpecificFrailty{{0.95, 0.85}};
    return m;
}

// reference correlated scenario for the cross-ratio grids
inline ModelSpec correlated_grid_spec() {
    ModelSpec m = shared_exp_model(1.0, {0.2, 0.25}, {0.15, 0.1});
    m.frailty = CorrelatedFrailty{0.95, 0.85, 0.8};
    return m;
}

inline HazardSpec random_hazard(TestRng& rng, bool exponential_only = false) {
    if (exponential_only) return {HazardFamily::exponential, 1.0, rng.uniform(0.2, 2.5)};
    static const HazardFamily fams[] = {HazardFamily::exponential, HazardFamily::weibull,
                                        HazardFamily::gamma, HazardFamily::loglogistic,
                                        HazardFamily::weibull_gompertz};
    HazardSpec h;
    h.family = fams[rng.index(5)];
    h.alpha = rng.uniform(0.2, 2.0);
    h.gamma = (h.family == HazardFamily::exponential) ? 1.0 : rng.uniform(0.5, 2.5);
    return h;
}

inline bifrail::FrailtySpec random_frailty(TestRng& rng, bifrail::FrailtyVariant v, int l) {
    switch (v) {
        case bifrail::FrailtyVariant::shared:
            return SharedFrailty{rng.uniform(0.3, 2.0)};
        case bifrail::FrailtyVariant::correlated: {
            double s1 = rng.uniform(0.4, 1.6), s2 = rng.uniform(0.4, 1.6);
            double rho = rng.uniform(0.1, 0.9) * std::min(s1 / s2, s2 / s1);
            return CorrelatedFrailty{s1, s2, rho};
        }
        case bifrail::FrailtyVariant::shared_cause_specific: {
            SharedCauseSpecificFrailty f;
            for (int j = 0; j < l; ++j) f.sigmas.push_back(rng.uniform(0.3, 1.8));
            return f;
        }
        case bifrail::FrailtyVariant::correlated_cause_specific: {
            CorrelatedCauseSpecificFrailty f;
            for (int j = 0; j < l; ++j) {
                double s1 = rng.uniform(0.4, 1.6), s2 = rng.uniform(0.4, 1.6);
                double rho = rng.uniform(0.1, 0.9) * std::min(s1 / s2, s2 / s1);
                f.causes.push_back({s1, s2, rho});
            }
            return f;
        }
    }
    return SharedFrailty{1.0};
}

inline ModelSpec random_model(TestRng& rng, bifrail::FrailtyVariant v, int l1, int l2,
                              bool exponential_only = false) {
    ModelSpec m;
    m.l1 = l1;
    m.l2 = l2;
    for (int j = 0; j < l1; ++j) m.hazards1.push_back(random_hazard(rng, exponential_only));
    for (int j = 0; j < l2; ++j) m.hazards2.push_back(random_hazard(rng, exponential_only));
    m.frailty = random_frailty(rng, v, l1);
    return m;
}

// ---- independent integration oracles (composite Simpson; no shared code
// with the adaptive Gauss-Kronrod implementation) ----

inline double simpson_1d(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double simpson_2d(const std::function<double(double, double)>& f, double t1, double t2,
                         int n) {
    auto inner = [&](double x) {
        return simpson_1d([&](double y) { return f(x, y); }, 0.0, t2, n);
    };
    return simpson_1d(inner, 0.0, t1, n);
}

// 2D oracle for sub-densities: integrates in u = w^p per axis with p =
// 3/min(gamma) so every fractional power of u becomes at least cubic in w
// (uniform Simpson otherwise loses orders to the origin corner), and starts
// an epsilon above zero to dodge the open orthant's boundary.
inline double oracle_distribution(const ModelSpec& m, int j1, int j2, double t1, double t2,
                                  int n = 512) {
    double g1 = m.hazards1[0].gamma, g2 = m.hazards2[0].gamma;
    for (const auto& h : m.hazards1) g1 = std::min(g1, h.gamma);
    for (const auto& h : m.hazards2) g2 = std::min(g2, h.gamma);
    const double p1 = 3.0 / g1, p2 = 3.0 / g2;
    auto f = [&](double w1, double w2) {
        const double u1 = std::pow(w1, p1), u2 = std::pow(w2, p2);
        const double jac = p1 * std::pow(w1, p1 - 1.0) * p2 * std::pow(w2, p2 - 1.0);
        return bifrail::joint_sub_density(m, j1, j2, u1, u2) * jac;
    };
    const double w1 = std::pow(t1, 1.0 / p1), w2 = std::pow(t2, 1.0 / p2);
    const double e1 = 1e-9 * w1, e2 = 1e-9 * w2;
    auto inner = [&](double x) {
        return simpson_1d([&](double y) { return f(x, y); }, e2, w2, n);
    };
    return simpson_1d(inner, e1, w1, n);
}

// chi-square upper tail by the halving recurrence, independent of the
// series/continued-fraction implementation
inline double chi2_tail_reference(double x, int df) {
    const double h = 0.5 * x;
    double q, term;
    int k;
    if (df % 2 == 0) {
        q = std::exp(-h);  // df = 2
        term = h * std::exp(-h);
        k = 2;
    } else {
        q = std::erfc(std::sqrt(h));  // df = 1
        term = std::sqrt(h) * std::exp(-h) / std::tgamma(1.5);
        k = 1;
    }
    while (k + 2 <= df) {
        q += term;  // Q(a+1,x) = Q(a,x) + x^a e^-x / Gamma(a+1), a = k/2
        k += 2;
        term *= h / (0.5 * k);
    }
    return q;
}

}  // namespace testutil
