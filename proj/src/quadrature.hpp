#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace bifrail {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
};

inline constexpr int kQuadMaxSubdivisions = 2000;
inline constexpr int kQuadMaxComponents = 16;

namespace quad_detail {

// 15-point Kronrod nodes (nonnegative half) with embedded 7-point Gauss rule.
inline constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelEstimate {
    double integral;
    double error;
};

// One GK15 application of a scalar integrand on [a,b].
template <class F>
PanelEstimate gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    fv[7] = f(c);
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    double resk = kWgk[7] * fv[7];
    double resg = kWg[3] * fv[7];
    double resabs = std::fabs(resk);
    for (int i = 0; i < 7; ++i) {
        double s = fv[i] + fv[14 - i];
        resk += kWgk[i] * s;
        resabs += kWgk[i] * (std::fabs(fv[i]) + std::fabs(fv[14 - i]));
        if (i % 2 == 1) resg += kWg[i / 2] * s;
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::fabs(fv[7] - mean);
    for (int i = 0; i < 7; ++i)
        resasc += kWgk[i] * (std::fabs(fv[i] - mean) + std::fabs(fv[14 - i] - mean));
    resasc *= h;
    resabs *= h;
    double err = std::fabs((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    if (eps > 0.0) err = std::max(err, eps);
    return {resk * h, err};
}

// Vector-valued GK15: f(x, out) fills ncomp values; error is reported on the
// weighted combination sum_i w[i] * component_i.
template <class F>
PanelEstimate gk15_vec(F&& f, double a, double b, int ncomp, const double* w,
                       double* integral_out) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15][kQuadMaxComponents];
    f(c, fv[7]);
    for (int i = 0; i < 7; ++i) {
        f(c - h * kXgk[i], fv[i]);
        f(c + h * kXgk[i], fv[14 - i]);
    }
    double combo_k = 0.0, combo_g = 0.0;
    for (int q = 0; q < ncomp; ++q) {
        double resk = kWgk[7] * fv[7][q];
        for (int i = 0; i < 7; ++i) resk += kWgk[i] * (fv[i][q] + fv[14 - i][q]);
        integral_out[q] = resk * h;
        combo_k += w[q] * resk;
    }
    // combo on the Gauss sub-rule
    {
        double cg = 0.0;
        for (int q = 0; q < ncomp; ++q) cg += w[q] * fv[7][q];
        combo_g = kWg[3] * cg;
        for (int i = 1; i < 7; i += 2) {
            double s = 0.0;
            for (int q = 0; q < ncomp; ++q) s += w[q] * (fv[i][q] + fv[14 - i][q]);
            combo_g += kWg[i / 2] * s;
        }
    }
    double combo_abs = 0.0;
    for (int n = 0; n < 15; ++n) {
        double cv = 0.0;
        for (int q = 0; q < ncomp; ++q) cv += w[q] * fv[n][q];
        combo_abs += std::fabs(cv) * (n == 7 ? kWgk[7] : kWgk[n < 7 ? n : 14 - n]);
    }
    double err = std::fabs((combo_k - combo_g) * h);
    const double eps = 50.0 * std::numeric_limits<double>::epsilon() * combo_abs * std::fabs(h);
    err = std::max(err, eps);
    return {combo_k * h, err};
}

struct Panel {
    double a, b;
    double integral;
    double error;
};

}  // namespace quad_detail

// Adaptive integration of f over the finite interval [lo, hi].
// Guarantees |value - integral| <= max(rel_tol*|value|, 1e-14) with the usual
// embedded-rule caveats; throws ErrorCode::non_convergence past the
// subdivision cap (message carries the best value and its error estimate).
template <class F>
QuadResult integrate_1d(F&& f, double lo, double hi, double rel_tol,
                        int max_subdiv = kQuadMaxSubdivisions) {
    if (!(lo < hi)) throw Error(ErrorCode::invalid_argument, "integrate_1d: need lo < hi");
    using quad_detail::Panel;
    std::vector<Panel> panels;
    panels.reserve(64);
    auto first = quad_detail::gk15(f, lo, hi);
    panels.push_back({lo, hi, first.integral, first.error});
    int evals = 15;
    double total = first.integral, total_err = first.error;
    while (true) {
        double tol = std::max(rel_tol * std::fabs(total), 1e-14);
        if (total_err <= tol) break;
        if ((int)panels.size() >= max_subdiv) {
            throw Error(ErrorCode::non_convergence,
                        "integrate_1d: subdivision limit reached; best value " +
                            std::to_string(total) + " with error estimate " +
                            std::to_string(total_err));
        }
        size_t worst = 0;
        for (size_t i = 1; i < panels.size(); ++i)
            if (panels[i].error > panels[worst].error) worst = i;
        Panel p = panels[worst];
        double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) {
            // interval no longer splittable in double precision
            break;
        }
        auto left = quad_detail::gk15(f, p.a, mid);
        auto right = quad_detail::gk15(f, mid, p.b);
        evals += 30;
        panels[worst] = {p.a, mid, left.integral, left.error};
        panels.push_back({mid, p.b, right.integral, right.error});
        total += left.integral + right.integral - p.integral;
        total_err += left.error + right.error - p.error;
    }
    // recompute sums to shed accumulation drift
    total = 0.0;
    total_err = 0.0;
    for (const auto& p : panels) {
        total += p.integral;
        total_err += p.error;
    }
    return {total, total_err, evals};
}

// Integration over [lo, infinity) through u = lo + s/(1-s); the transform is
// truncated at s = 1 - 1e-12 (mass beyond is negligible for the power-law
// tails this is used on).
template <class F>
QuadResult integrate_semi_infinite(F&& f, double lo, double rel_tol,
                                   int max_subdiv = kQuadMaxSubdivisions) {
    auto g = [&f, lo](double s) {
        double om = 1.0 - s;
        double u = lo + s / om;
        return f(u) / (om * om);
    };
    return integrate_1d(g, 0.0, 1.0 - 1e-12, rel_tol, max_subdiv);
}

// Iterated adaptive quadrature of f(u1,u2) over (0,t1) x (0,t2).
template <class F>
QuadResult integrate_2d(F&& f, double t1, double t2, double rel_tol,
                        int max_subdiv = kQuadMaxSubdivisions) {
    if (!(t1 > 0.0) || !(t2 > 0.0))
        throw Error(ErrorCode::invalid_argument, "integrate_2d: need t1, t2 > 0");
    const double inner_tol = 0.2 * rel_tol;
    int inner_evals = 0;
    auto outer = [&](double u1) {
        QuadResult inner;
        try {
            inner = integrate_1d([&](double u2) { return f(u1, u2); }, 0.0, t2,
                                 inner_tol, max_subdiv);
        } catch (const Error& e) {
            throw Error(e.code(), std::string("integrate_2d inner axis: ") + e.what());
        }
        inner_evals += inner.evaluations;
        return inner.value;
    };
    QuadResult res;
    try {
        res = integrate_1d(outer, 0.0, t1, 0.8 * rel_tol, max_subdiv);
    } catch (const Error& e) {
        if (std::string(e.what()).find("inner axis") != std::string::npos) throw;
        throw Error(e.code(), std::string("integrate_2d outer axis: ") + e.what());
    }
    res.error_estimate += inner_tol * std::fabs(res.value);
    res.evaluations += inner_evals;
    return res;
}

// Vector-valued adaptive integration on [lo, hi]; error controlled on the
// weighted combination of components. Values for all components are returned.
template <class F>
QuadResult integrate_1d_vec(F&& f, int ncomp, const double* weights, double lo, double hi,
                            double rel_tol, double* values_out,
                            int max_subdiv = kQuadMaxSubdivisions) {
    if (!(lo < hi)) throw Error(ErrorCode::invalid_argument, "integrate_1d_vec: need lo < hi");
    if (ncomp < 1 || ncomp > kQuadMaxComponents)
        throw Error(ErrorCode::invalid_argument, "integrate_1d_vec: bad component count");
    struct VPanel {
        double a, b;
        double integral[kQuadMaxComponents];
        double combo;
        double error;
    };
    std::vector<VPanel> panels;
    panels.reserve(64);
    VPanel p0;
    p0.a = lo;
    p0.b = hi;
    auto first = quad_detail::gk15_vec(f, lo, hi, ncomp, weights, p0.integral);
    p0.combo = first.integral;
    p0.error = first.error;
    panels.push_back(p0);
    int evals = 15;
    double combo_total = first.integral, total_err = first.error;
    while (true) {
        double tol = std::max(rel_tol * std::fabs(combo_total), 1e-14);
        if (total_err <= tol) break;
        if ((int)panels.size() >= max_subdiv)
            throw Error(ErrorCode::non_convergence,
                        "integrate_1d_vec: subdivision limit reached; combo value " +
                            std::to_string(combo_total) + " with error estimate " +
                            std::to_string(total_err));
        size_t worst = 0;
        for (size_t i = 1; i < panels.size(); ++i)
            if (panels[i].error > panels[worst].error) worst = i;
        VPanel p = panels[worst];
        double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) break;
        VPanel left, right;
        left.a = p.a;
        left.b = mid;
        right.a = mid;
        right.b = p.b;
        auto le = quad_detail::gk15_vec(f, p.a, mid, ncomp, weights, left.integral);
        auto re = quad_detail::gk15_vec(f, mid, p.b, ncomp, weights, right.integral);
        evals += 30;
        left.combo = le.integral;
        left.error = le.error;
        right.combo = re.integral;
        right.error = re.error;
        combo_total += le.integral + re.integral - p.combo;
        total_err += le.error + re.error - p.error;
        panels[worst] = left;
        panels.push_back(right);
    }
    for (int q = 0; q < ncomp; ++q) values_out[q] = 0.0;
    combo_total = 0.0;
    total_err = 0.0;
    for (const auto& p : panels) {
        for (int q = 0; q < ncomp; ++q) values_out[q] += p.integral[q];
        combo_total += p.combo;
        total_err += p.error;
    }
    return {combo_total, total_err, evals};
}

// Iterated vector-valued 2D quadrature over (0,t1) x (0,t2); optional axis
// maps m1, m2 let callers integrate in substituted coordinates (the maps give
// (u, jacobian) from the integration variable, used to soften t^(gamma-1)
// endpoint singularities).
template <class F>
QuadResult integrate_2d_vec(F&& f, int ncomp, const double* weights, double t1, double t2,
                            double rel_tol, double* values_out,
                            int max_subdiv = kQuadMaxSubdivisions) {
    // tight inner tolerance keeps the inner-quadrature noise well below the
    // outer target, so the outer rule does not refine against noise
    const double inner_tol = 0.05 * rel_tol;
    int inner_evals = 0;
    auto outer = [&](double u1, double* out) {
        QuadResult inner;
        try {
            inner = integrate_1d_vec([&](double u2, double* o) { f(u1, u2, o); }, ncomp,
                                     weights, 0.0, t2, inner_tol, out, max_subdiv);
        } catch (const Error& e) {
            throw Error(e.code(), std::string("integrate_2d_vec inner axis: ") + e.what());
        }
        inner_evals += inner.evaluations;
    };
    QuadResult res = integrate_1d_vec(outer, ncomp, weights, 0.0, t1, 0.95 * rel_tol,
                                      values_out, max_subdiv);
    res.error_estimate += inner_tol * std::fabs(res.value);
    res.evaluations += inner_evals;
    return res;
}

// Safeguarded secant/bisection root finder on a bracketing interval.
// Returns x with |f(x)| <= tol or bracket width <= tol.
template <class F>
double find_root(F&& f, double lo, double hi, double tol) {
    if (!(lo < hi)) throw Error(ErrorCode::invalid_argument, "find_root: need lo < hi");
    double fa = f(lo), fb = f(hi);
    if (fa == 0.0) return lo;
    if (fb == 0.0) return hi;
    if ((fa > 0.0) == (fb > 0.0))
        throw Error(ErrorCode::bracket, "find_root: f has the same sign at both bracket ends");
    double a = lo, b = hi;
    for (int iter = 0; iter < 200; ++iter) {
        double x;
        double denom = fb - fa;
        if (denom != 0.0) {
            x = b - fb * (b - a) / denom;  // secant
            double w = b - a;
            if (!(x > a + 0.01 * w && x < b - 0.01 * w)) x = 0.5 * (a + b);
        } else {
            x = 0.5 * (a + b);
        }
        double fx = f(x);
        if (std::fabs(fx) <= tol) return x;
        if ((fx > 0.0) == (fa > 0.0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a <= tol) return 0.5 * (a + b);
    }
    return 0.5 * (a + b);
}

}  // namespace bifrail
