#include "simulation.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "errors.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace bifrail {

namespace {

// joint censoring probability under Exp(mu) monitoring, integrated in v = mu*x
double joint_censoring_probability(const ModelSpec& spec, double mu) {
    auto f = [&](double v) {
        const double x = v / mu;
        return joint_survival(spec, x, x) * std::exp(-v);
    };
    return integrate_semi_infinite(f, 0.0, 1e-10).value;
}

}  // namespace

double solve_monitoring_rate(const ModelSpec& spec, double p_cen) {
    validate_model(spec, ValidationMode::strict);
    if (!(p_cen > 0.0 && p_cen < 1.0))
        throw Error(ErrorCode::invalid_argument, "p_cen must be in (0,1)");
    double lo = 1e-6, hi = 1e6;
    auto g = [&](double mu) { return joint_censoring_probability(spec, mu) - p_cen; };
    double glo = g(lo), ghi = g(hi);
    for (int grow = 0; grow < 6 && glo > 0.0; ++grow) {
        lo /= 100.0;
        glo = g(lo);
    }
    for (int grow = 0; grow < 6 && ghi < 0.0; ++grow) {
        hi *= 100.0;
        ghi = g(hi);
    }
    if (glo > 0.0 || ghi < 0.0)
        throw Error(ErrorCode::non_convergence,
                    "monitoring-rate calibration: p_cen = " + std::to_string(p_cen) +
                        " not attainable; achieved range [" + std::to_string(glo + p_cen) + ", " +
                        std::to_string(ghi + p_cen) + "]");
    return find_root(g, lo, hi, 1e-9);
}

Dataset generate_dataset(const ModelSpec& spec, double mu_monitor, int n, std::uint64_t seed) {
    validate_model(spec, ValidationMode::strict);
    if (!(mu_monitor > 0.0))
        throw Error(ErrorCode::invalid_argument, "mu_monitor must be > 0");
    if (n < 1) throw Error(ErrorCode::invalid_argument, "n must be >= 1");
    SplitMix64 rng{mix_seed(seed, 0x6d6f6e69746f72ULL)};
    std::vector<double> xs(n);
    double xmin = 0.0, xmax = 0.0;
    for (int i = 0; i < n; ++i) {
        double x;
        do {
            x = -std::log(1.0 - rng.next_unit()) / mu_monitor;
        } while (!(x > 0.0));
        xs[i] = x;
        xmin = (i == 0) ? x : std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    CellGrid grid(spec, xmin, xmax);
    Dataset data;
    data.l1 = spec.l1;
    data.l2 = spec.l2;
    data.observations.reserve(n);
    const int n2 = spec.l2 + 1;
    std::vector<double> cells((spec.l1 + 1) * (spec.l2 + 1));
    for (int i = 0; i < n; ++i) {
        grid.cell_matrix(xs[i], cells.data());
        const double u = rng.next_unit();
        double cum = 0.0;
        int j1 = spec.l1, j2 = spec.l2;  // falls through to the last cell
        bool done = false;
        for (int a = 0; a <= spec.l1 && !done; ++a)
            for (int b = 0; b <= spec.l2 && !done; ++b) {
                cum += cells[a * n2 + b];
                if (u < cum) {
                    j1 = a;
                    j2 = b;
                    done = true;
                }
            }
        data.observations.push_back({xs[i], xs[i], j1, j2});
    }
    return data;
}

SimSummary run_study(const SimConfig& config) {
    validate_model(config.true_model, ValidationMode::strict);
    if (config.replicates < 1)
        throw Error(ErrorCode::invalid_argument, "replicates must be >= 1");
    if (config.n < 2) throw Error(ErrorCode::invalid_argument, "n must be >= 2");
    const double mu = solve_monitoring_rate(config.true_model, config.p_cen);
    const auto truth = pack_natural(config.true_model);
    const auto names = param_names(config.true_model);
    const int p = (int)truth.size();

    struct RepResult {
        bool converged = false;
        bool has_se = false;
        std::vector<double> mle, se;
    };
    std::vector<RepResult> reps(config.replicates);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= config.replicates) break;
            RepResult& out = reps[r];
            try {
                Dataset data = generate_dataset(config.true_model, mu, config.n,
                                                mix_seed(config.seed, (std::uint64_t)r + 1));
                ModelSpec init = default_init(config.true_model, data);
                FitOptions fo = config.fit_options;
                fo.seed = mix_seed(config.seed, 0x726573746172ULL + (std::uint64_t)r);
                FitResult fr = fit(data, init, fo);
                out.converged = fr.converged;
                out.mle = fr.mle;
                out.has_se = fr.hessian_pd;
                out.se = fr.se;
            } catch (const Error&) {
                out.converged = false;  // counted and excluded per-statistic
            }
        }
    };
    int nthreads = config.threads > 0 ? config.threads
                                      : (int)std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min(nthreads, config.replicates);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SimSummary summary;
    summary.replicates = config.replicates;
    summary.mu_monitor = mu;
    for (const auto& r : reps) {
        if (r.converged) ++summary.converged;
        if (r.converged && r.has_se) ++summary.se_available;
    }
    if (summary.converged == 0)
        throw Error(ErrorCode::non_convergence, "study produced no successful replicates");
    const double z = normal_quantile(0.5 + 0.5 * config.confidence);
    summary.sse_single_replicate = (summary.converged == 1);
    for (int i = 0; i < p; ++i) {
        ParamSummary ps;
        ps.name = names[i];
        ps.truth = truth[i];
        double mean = 0.0;
        for (const auto& r : reps)
            if (r.converged) mean += r.mle[i];
        mean /= summary.converged;
        ps.bias = mean - truth[i];
        double ss = 0.0;
        for (const auto& r : reps)
            if (r.converged) ss += (r.mle[i] - mean) * (r.mle[i] - mean);
        ps.sse = (summary.converged > 1) ? std::sqrt(ss / (summary.converged - 1)) : 0.0;
        double ase = 0.0;
        int covered = 0;
        for (const auto& r : reps)
            if (r.converged && r.has_se) {
                ase += r.se[i];
                if (std::fabs(r.mle[i] - truth[i]) <= z * r.se[i]) ++covered;
            }
        ps.ase = summary.se_available > 0 ? ase / summary.se_available : 0.0;
        ps.cp = summary.se_available > 0 ? (double)covered / summary.se_available : 0.0;
        summary.params.push_back(ps);
    }
    return summary;
}

}  // namespace bifrail
