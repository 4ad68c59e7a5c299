#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "helpers.hpp"
#include "quadrature.hpp"
#include "simulation.hpp"

using namespace bifrail;
using testutil::TestRng;

namespace {

// test-side joint censoring probability under Exp(mu) monitoring
double censoring_prob(const ModelSpec& m, double mu) {
    return integrate_semi_infinite(
               [&](double v) { return joint_survival(m, v / mu, v / mu) * std::exp(-v); }, 0.0,
               1e-11)
        .value;
}

}  // namespace

TEST_CASE("monitoring-rate calibration") {
    ModelSpec m = testutil::shared_study_spec();
    SUBCASE("self-consistency and the external anchor") {
        const double mu = solve_monitoring_rate(m, 0.1);
        CHECK(mu == doctest::Approx(0.6317970893).epsilon(1e-6));
        CHECK(censoring_prob(m, mu) == doctest::Approx(0.1).epsilon(1e-6));
        const double mu2 = solve_monitoring_rate(m, 0.2);
        CHECK(mu2 == doctest::Approx(1.7658528582).epsilon(1e-6));
    }
    SUBCASE("censoring probability increases with the monitoring rate") {
        double prev = 0.0;
        for (double mu : {0.01, 0.1, 1.0, 10.0, 100.0}) {
            const double g = censoring_prob(m, mu);
            CHECK(g > prev);
            prev = g;
        }
        CHECK(censoring_prob(m, 1e-6) < 0.01);
        CHECK(censoring_prob(m, 1e6) > 0.99);
    }
    SUBCASE("solved rates are ordered in the target") {
        CHECK(solve_monitoring_rate(m, 0.05) < solve_monitoring_rate(m, 0.1));
        CHECK(solve_monitoring_rate(m, 0.1) < solve_monitoring_rate(m, 0.3));
    }
    CHECK_THROWS_AS(solve_monitoring_rate(m, 1.5), Error);
}

TEST_CASE("dataset generation determinism") {
    ModelSpec m = testutil::shared_study_spec();
    const double mu = solve_monitoring_rate(m, 0.1);
    Dataset a = generate_dataset(m, mu, 200, 11);
    Dataset b = generate_dataset(m, mu, 200, 11);
    REQUIRE(a.observations.size() == b.observations.size());
    for (size_t i = 0; i < a.observations.size(); ++i) {
        CHECK(a.observations[i].x1 == b.observations[i].x1);
        CHECK(a.observations[i].j1 == b.observations[i].j1);
        CHECK(a.observations[i].j2 == b.observations[i].j2);
        CHECK(a.observations[i].x1 == a.observations[i].x2);  // common monitoring time
    }
    Dataset c = generate_dataset(m, mu, 200, 12);
    bool differs = false;
    for (size_t i = 0; i < a.observations.size(); ++i)
        if (a.observations[i].x1 != c.observations[i].x1) differs = true;
    CHECK(differs);
}

TEST_CASE("empirical cell frequencies match the model") {
    ModelSpec m = testutil::shared_study_spec();
    const double p_cen = 0.1;
    const double mu = solve_monitoring_rate(m, p_cen);
    const int n = 100000;
    Dataset d = generate_dataset(m, mu, n, 2024);
    int censored = 0;
    int j1_count[3] = {0, 0, 0};
    for (const auto& o : d.observations) {
        if (o.j1 == 0 && o.j2 == 0) ++censored;
        ++j1_count[o.j1];
    }
    const double se_cen = std::sqrt(p_cen * (1.0 - p_cen) / n);
    CHECK(std::fabs((double)censored / n - p_cen) <= 3.0 * se_cen);

    // P[J1 = j] against the quadrature oracle int F_j^(1)(x) mu e^(-mu x) dx
    for (int j = 1; j <= 2; ++j) {
        const double pj =
            integrate_semi_infinite(
                [&](double v) {
                    return marginal_sub_distribution(m, 1, j, v / mu) * std::exp(-v);
                },
                0.0, 1e-9)
                .value;
        const double se = std::sqrt(pj * (1.0 - pj) / n);
        CHECK(std::fabs((double)j1_count[j] / n - pj) <= 3.0 * se);
    }
}

TEST_CASE("study aggregation") {
    SimConfig cfg;
    cfg.true_model = testutil::shared_study_spec();
    cfg.p_cen = 0.1;
    cfg.n = 120;
    cfg.replicates = 24;
    cfg.seed = 99;
    cfg.threads = 2;
    cfg.fit_options.max_iterations = 5000;
    SimSummary s = run_study(cfg);
    CHECK(s.replicates == 24);
    CHECK(s.converged >= 20);
    CHECK(s.se_available >= 18);
    CHECK(s.mu_monitor == doctest::Approx(0.6317970893).epsilon(1e-6));
    REQUIRE(s.params.size() == 5);
    for (const auto& p : s.params) {
        CHECK(p.sse > 0.0);
        CHECK(p.ase > 0.0);
        CHECK(p.cp >= 0.0);
        CHECK(p.cp <= 1.0);
        CHECK(std::fabs(p.bias) < 2.0);
    }
    // bit-reproducible: same config, fresh run, single thread
    SimConfig cfg1 = cfg;
    cfg1.threads = 1;
    SimSummary s2 = run_study(cfg1);
    for (size_t i = 0; i < s.params.size(); ++i) {
        CHECK(s.params[i].bias == s2.params[i].bias);
        CHECK(s.params[i].sse == s2.params[i].sse);
        CHECK(s.params[i].ase == s2.params[i].ase);
        CHECK(s.params[i].cp == s2.params[i].cp);
    }
}

TEST_CASE("single-replicate study reports zero SSE with a flag") {
    SimConfig cfg;
    cfg.true_model = testutil::shared_study_spec();
    cfg.p_cen = 0.1;
    cfg.n = 100;
    cfg.replicates = 1;
    cfg.seed = 5;
    SimSummary s = run_study(cfg);
    CHECK(s.sse_single_replicate);
    for (const auto& p : s.params) CHECK(p.sse == 0.0);
}
