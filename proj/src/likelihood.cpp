#include "likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"
#include "quadrature.hpp"

namespace bifrail {

namespace {

constexpr double kFloor = 1e-300;
constexpr double kNegBand = -1e-8;

bool closed_form_cells(const ModelSpec& spec) {
    FrailtyVariant v = frailty_variant(spec.frailty);
    return (v == FrailtyVariant::shared || v == FrailtyVariant::correlated) &&
           all_hazards_exponential(spec);
}

double clamp_probability(double v, bool& clamped, const char* what) {
    if (v < kNegBand)
        throw Error(ErrorCode::integrity,
                    std::string(what) + " came out " + std::to_string(v) +
                        ", beyond the -1e-8 quadrature band");
    if (v < kFloor) {
        clamped = true;
        return kFloor;
    }
    return std::min(v, 1.0);
}

}  // namespace

bool Dataset::common_monitoring() const {
    for (const auto& o : observations)
        if (o.x1 != o.x2) return false;
    return true;
}

double Dataset::min_monitoring() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& o : observations) m = std::min({m, o.x1, o.x2});
    return m;
}

double Dataset::max_monitoring() const {
    double m = 0.0;
    for (const auto& o : observations) m = std::max({m, o.x1, o.x2});
    return m;
}

void validate_dataset(const Dataset& data, const ModelSpec& spec) {
    if (data.l1 != spec.l1 || data.l2 != spec.l2)
        throw Error(ErrorCode::invalid_argument,
                    "dataset cause counts (" + std::to_string(data.l1) + "," +
                        std::to_string(data.l2) + ") do not match the model (" +
                        std::to_string(spec.l1) + "," + std::to_string(spec.l2) + ")");
    for (size_t i = 0; i < data.observations.size(); ++i) {
        const auto& o = data.observations[i];
        const std::string row = "observation " + std::to_string(i + 1);
        if (!(o.x1 > 0.0) || !std::isfinite(o.x1) || !(o.x2 > 0.0) || !std::isfinite(o.x2))
            throw Error(ErrorCode::invalid_argument, row + ": monitoring times must be positive");
        if (o.j1 < 0 || o.j1 > spec.l1 || o.j2 < 0 || o.j2 > spec.l2)
            throw Error(ErrorCode::invalid_argument, row + ": cause index out of range");
    }
}

PairResult pair_likelihood(const ModelSpec& spec, const Observation& obs, double rel_tol) {
    if (!(obs.x1 > 0.0) || !(obs.x2 > 0.0))
        throw Error(ErrorCode::invalid_argument, "pair_likelihood: monitoring times must be > 0");
    if (obs.j1 < 0 || obs.j1 > spec.l1 || obs.j2 < 0 || obs.j2 > spec.l2)
        throw Error(ErrorCode::invalid_argument, "pair_likelihood: cause index out of range");
    PairResult r;
    double v;
    if (obs.j1 == 0 && obs.j2 == 0) {
        v = joint_survival(spec, obs.x1, obs.x2);
    } else if (obs.j1 >= 1 && obs.j2 >= 1) {
        v = joint_sub_distribution(spec, obs.j1, obs.j2, obs.x1, obs.x2, rel_tol);
    } else if (obs.j1 == 0) {
        v = censored_one_failed(spec, 2, obs.j2, obs.x2, obs.x1, rel_tol);
    } else {
        v = censored_one_failed(spec, 1, obs.j1, obs.x1, obs.x2, rel_tol);
    }
    r.value = clamp_probability(v, r.clamped, "pair likelihood");
    return r;
}

LogLikResult log_likelihood(const ModelSpec& spec, const Dataset& data, double rel_tol) {
    if (data.observations.empty())
        throw Error(ErrorCode::invalid_argument, "log_likelihood: dataset is empty");
    validate_dataset(data, spec);
    LogLikResult out;
    std::vector<double> terms;
    terms.reserve(data.observations.size());
    const bool accelerate = !closed_form_cells(spec) && data.common_monitoring() &&
                            data.observations.size() >= 64 &&
                            data.max_monitoring() > 1.02 * data.min_monitoring();
    bool accelerated = false;
    if (accelerate) {
        try {
            // denser interpolation when the caller asks for tight tolerances
            // (the finite-difference Hessian path does)
            const int nodes = (rel_tol <= 5e-9) ? 33 : 21;
            CellGrid grid(spec, data.min_monitoring(), data.max_monitoring(), rel_tol, nodes);
            for (size_t i = 0; i < data.observations.size(); ++i) {
                const auto& o = data.observations[i];
                bool clamped = false;
                double v =
                    clamp_probability(grid.cell(o.x1, o.j1, o.j2), clamped, "pair likelihood");
                if (clamped) {
                    ++out.underflow_warnings;
                    out.underflow_indices.push_back((int)i);
                }
                terms.push_back(std::log(v));
            }
            accelerated = true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::unstable_point) throw;
            // grid unusable (nonpositive cells); fall back to the direct path
            out = LogLikResult{};
            terms.clear();
        }
    }
    if (!accelerated) {
        for (size_t i = 0; i < data.observations.size(); ++i) {
            PairResult pr = pair_likelihood(spec, data.observations[i], rel_tol);
            if (pr.clamped) {
                ++out.underflow_warnings;
                out.underflow_indices.push_back((int)i);
            }
            terms.push_back(std::log(pr.value));
        }
    }
    // sorted reduction: the sum is exactly invariant under row permutations
    std::sort(terms.begin(), terms.end());
    for (double t : terms) out.value += t;
    return out;
}

CellMatrix cell_probability_matrix(const ModelSpec& spec, double x1, double x2, double rel_tol) {
    if (!(x1 > 0.0) || !(x2 > 0.0))
        throw Error(ErrorCode::invalid_argument, "cell_probability_matrix: times must be > 0");
    CellMatrix m;
    m.l1 = spec.l1;
    m.l2 = spec.l2;
    m.p.assign((spec.l1 + 1) * (spec.l2 + 1), 0.0);
    auto set = [&](int j1, int j2, double v) { m.p[j1 * (spec.l2 + 1) + j2] = v; };

    set(0, 0, joint_survival(spec, x1, x2));
    double cells[kQuadMaxComponents];
    joint_sub_distribution_matrix(spec, x1, x2, rel_tol, cells);
    for (int j1 = 1; j1 <= spec.l1; ++j1)
        for (int j2 = 1; j2 <= spec.l2; ++j2) set(j1, j2, cells[(j1 - 1) * spec.l2 + (j2 - 1)]);
    for (int j2 = 1; j2 <= spec.l2; ++j2)
        set(0, j2, censored_one_failed(spec, 2, j2, x2, x1, 0.1 * rel_tol));
    for (int j1 = 1; j1 <= spec.l1; ++j1)
        set(j1, 0, censored_one_failed(spec, 1, j1, x1, x2, 0.1 * rel_tol));

    double sum = 0.0;
    for (double v : m.p) {
        if (v < kNegBand)
            throw Error(ErrorCode::integrity, "cell_probability_matrix: negative cell " +
                                                  std::to_string(v));
        sum += v;
    }
    m.raw_sum = sum;
    if (std::fabs(sum - 1.0) > 1e-6)
        throw Error(ErrorCode::integrity,
                    "cell_probability_matrix: cells sum to " + std::to_string(sum) +
                        " (model-formula inconsistency)");
    for (double& v : m.p) v = std::max(v, 0.0) / sum;
    return m;
}

// ---- CellGrid ----

namespace {

// Barycentric interpolation on Chebyshev-Lobatto points.
struct Chebyshev {
    double a = 0.0, b = 1.0;
    std::vector<double> y;   // node ordinates
    std::vector<double> fy;  // node values

    double eval(double x) const {
        const int n = (int)y.size() - 1;
        double num = 0.0, den = 0.0;
        for (int i = 0; i <= n; ++i) {
            double d = x - y[i];
            if (d == 0.0) return fy[i];
            double w = (i == 0 || i == n) ? 0.5 : 1.0;
            if (i & 1) w = -w;
            num += w / d * fy[i];
            den += w / d;
        }
        return num / den;
    }
};

}  // namespace

struct CellGrid::Impl {
    ModelSpec spec;
    bool direct = false;        // closed-form cells: no interpolation needed
    double rel_tol = 1e-9;
    // interpolants of ln cell(x) for j1,j2 in 0..L (index j1*(l2+1)+j2); the
    // (0,0) cell is always computed closed-form
    std::vector<Chebyshev> ln_cells;

    double cell_direct(double x, int j1, int j2) const {
        Observation o{x, x, j1, j2};
        return pair_likelihood(spec, o, rel_tol).value;
    }
};

CellGrid::CellGrid(const ModelSpec& spec, double xmin, double xmax, double rel_tol, int nodes) {
    impl_ = std::make_unique<Impl>();
    impl_->spec = spec;
    impl_->rel_tol = rel_tol;
    if (closed_form_cells(spec) || !(xmax > xmin) || !(xmin > 0.0)) {
        impl_->direct = true;
        return;
    }
    const int n1 = spec.l1 + 1, n2 = spec.l2 + 1;
    impl_->ln_cells.resize(n1 * n2);
    const double a = std::log(xmin), b = std::log(xmax);
    std::vector<double> ys(nodes);
    for (int i = 0; i < nodes; ++i)
        ys[i] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(M_PI * i / (nodes - 1));
    for (int c = 0; c < n1 * n2; ++c) {
        impl_->ln_cells[c].a = a;
        impl_->ln_cells[c].b = b;
        impl_->ln_cells[c].y = ys;
        impl_->ln_cells[c].fy.assign(nodes, 0.0);
    }
    double cells[kQuadMaxComponents];
    for (int i = 0; i < nodes; ++i) {
        const double x = std::exp(ys[i]);
        joint_sub_distribution_matrix(spec, x, x, rel_tol, cells);
        for (int j1 = 1; j1 <= spec.l1; ++j1)
            for (int j2 = 1; j2 <= spec.l2; ++j2) {
                double v = cells[(j1 - 1) * spec.l2 + (j2 - 1)];
                if (!(v > 0.0))
                    throw Error(ErrorCode::unstable_point, "cell grid: nonpositive cell");
                impl_->ln_cells[j1 * n2 + j2].fy[i] = std::log(v);
            }
        for (int j2 = 1; j2 <= spec.l2; ++j2) {
            double v = censored_one_failed(spec, 2, j2, x, x, rel_tol);
            if (!(v > 0.0))
                throw Error(ErrorCode::unstable_point, "cell grid: nonpositive cell");
            impl_->ln_cells[0 * n2 + j2].fy[i] = std::log(v);
        }
        for (int j1 = 1; j1 <= spec.l1; ++j1) {
            double v = censored_one_failed(spec, 1, j1, x, x, rel_tol);
            if (!(v > 0.0))
                throw Error(ErrorCode::unstable_point, "cell grid: nonpositive cell");
            impl_->ln_cells[j1 * n2 + 0].fy[i] = std::log(v);
        }
    }
}

CellGrid::~CellGrid() = default;
CellGrid::CellGrid(CellGrid&&) noexcept = default;

double CellGrid::cell(double x, int j1, int j2) const {
    if (j1 == 0 && j2 == 0) return joint_survival(impl_->spec, x, x);
    if (impl_->direct) return impl_->cell_direct(x, j1, j2);
    const int n2 = impl_->spec.l2 + 1;
    return std::exp(impl_->ln_cells[j1 * n2 + j2].eval(std::log(x)));
}

void CellGrid::cell_matrix(double x, double* out) const {
    const int n1 = impl_->spec.l1 + 1, n2 = impl_->spec.l2 + 1;
    double sum = 0.0;
    for (int j1 = 0; j1 < n1; ++j1)
        for (int j2 = 0; j2 < n2; ++j2) {
            double v = cell(x, j1, j2);
            out[j1 * n2 + j2] = v;
            sum += v;
        }
    if (std::fabs(sum - 1.0) > 1e-6)
        throw Error(ErrorCode::integrity,
                    "cell grid: cells sum to " + std::to_string(sum) + " at x = " +
                        std::to_string(x));
    for (int c = 0; c < n1 * n2; ++c) out[c] /= sum;
}

}  // namespace bifrail
