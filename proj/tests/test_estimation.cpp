#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "estimation.hpp"
#include "helpers.hpp"
#include "simulation.hpp"

using namespace bifrail;
using testutil::TestRng;

TEST_CASE("parameter packing and names") {
    ModelSpec shared = testutil::shared_study_spec();
    CHECK(free_param_count(shared) == 5);
    auto names = param_names(shared);
    CHECK(names == std::vector<std::string>{"alpha_1_1", "alpha_1_2", "alpha_2_1", "alpha_2_2",
                                            "sigma"});
    ModelSpec corr = testutil::correlated_study_spec();
    CHECK(free_param_count(corr) == 7);
    ModelSpec tied = corr;
    tied.tie_correlated_sigmas = true;
    CHECK(free_param_count(tied) == 6);
    CHECK(param_names(tied)[4] == "sigma");
    ModelSpec cs = testutil::shared_cs_study_spec();
    CHECK(free_param_count(cs) == 6);
    ModelSpec ccs = testutil::shared_exp_model(1.0, {0.2, 0.25}, {0.15, 0.1});
    ccs.frailty = CorrelatedCauseSpecificFrailty{{{0.9, 0.7, 0.5}, {0.8, 0.6, 0.4}}};
    CHECK(free_param_count(ccs) == 10);
    ModelSpec wb = shared;
    wb.hazards1[0].family = HazardFamily::weibull;
    wb.hazards1[0].gamma = 1.4;
    CHECK(free_param_count(wb) == 6);
    CHECK(param_names(wb)[0] == "gamma_1_1");

    // pack/unpack round trip on the natural scale
    auto v = pack_natural(corr);
    ModelSpec back = unpack_natural(corr, v);
    CHECK(pack_natural(back) == v);
}

TEST_CASE("unconstrained transform") {
    // alpha = 1 maps to 0
    ModelSpec m = testutil::shared_exp_model(1.0, {1.0}, {1.0});
    auto z = to_unconstrained(m);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK(z[2] == 0.0);  // sigma = 1

    // sigma1 = sigma2 = 1, rho = 0.5 maps to logit(0.5) = 0
    ModelSpec c = testutil::shared_exp_model(1.0, {1.0}, {1.0});
    c.frailty = CorrelatedFrailty{1.0, 1.0, 0.5};
    auto zc = to_unconstrained(c);
    CHECK(zc.back() == doctest::Approx(0.0).epsilon(1e-14));

    // round trip of the reference correlated triple
    ModelSpec p = testutil::correlated_study_spec();
    ModelSpec back = from_unconstrained(p, to_unconstrained(p));
    auto vp = pack_natural(p);
    auto vb = pack_natural(back);
    for (size_t i = 0; i < vp.size(); ++i) CHECK(vb[i] == doctest::Approx(vp[i]).epsilon(1e-12));

    // random round trips across variants, including ties
    TestRng rng(31);
    const FrailtyVariant vs[] = {FrailtyVariant::shared, FrailtyVariant::correlated,
                                 FrailtyVariant::shared_cause_specific,
                                 FrailtyVariant::correlated_cause_specific};
    for (auto v : vs)
        for (int rep = 0; rep < 5; ++rep) {
            ModelSpec r = testutil::random_model(rng, v, 2, 2);
            if ((v == FrailtyVariant::correlated ||
                 v == FrailtyVariant::correlated_cause_specific) &&
                rep % 2 == 1)
                r.tie_correlated_sigmas = true;
            if (r.tie_correlated_sigmas) {
                if (auto* f = std::get_if<CorrelatedFrailty>(&r.frailty)) {
                    f->sigma2 = f->sigma1;
                    f->rho = 0.4;
                }
                if (auto* f = std::get_if<CorrelatedCauseSpecificFrailty>(&r.frailty))
                    for (auto& cse : f->causes) {
                        cse.sigma2 = cse.sigma1;
                        cse.rho = 0.4;
                    }
            }
            auto vr = pack_natural(r);
            auto vb2 = pack_natural(from_unconstrained(r, to_unconstrained(r)));
            for (size_t i = 0; i < vr.size(); ++i)
                CHECK(vb2[i] == doctest::Approx(vr[i]).epsilon(1e-12));
        }

    // forward transform rejects constraint violations
    ModelSpec badrho = p;
    std::get<CorrelatedFrailty>(badrho.frailty).rho = 1.2;
    CHECK_THROWS_AS(to_unconstrained(badrho), Error);
}

TEST_CASE("finite-difference hessian on a quadratic") {
    const int n = 3;
    const double lam[n] = {2.0, 0.5, 7.0};
    const double mid[n] = {1.0, -2.0, 0.3};
    const double nobs = 50.0;
    auto f = [&](const std::vector<double>& x) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += 0.5 * nobs * lam[i] * (x[i] - mid[i]) * (x[i] - mid[i]);
        return s;
    };
    std::vector<double> x0 = {1.0, -2.0, 0.3};
    auto H = fd_hessian(f, x0, 1e-4);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            CHECK(H[i * n + j] == H[j * n + i]);  // symmetric by construction
            if (i == j)
                CHECK(H[i * n + i] == doctest::Approx(nobs * lam[i]).epsilon(1e-6));
            else
                CHECK(std::fabs(H[i * n + j]) < 1e-4);
        }
    auto se = spd_inverse_diag_sqrt(H, n);
    REQUIRE(se);
    for (int i = 0; i < n; ++i)
        CHECK((*se)[i] == doctest::Approx(1.0 / std::sqrt(nobs * lam[i])).epsilon(1e-6));

    // indefinite matrix is rejected
    std::vector<double> bad = {1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0};
    CHECK(!spd_inverse_diag_sqrt(bad, 3));
}

TEST_CASE("aic and likelihood ratio test") {
    CHECK(aic_value(-100.0, 7) == 214.0);
    // same loglik, 5 vs 7 parameters: AIC differs by exactly 4
    CHECK(aic_value(-321.25, 7) - aic_value(-321.25, 5) == 4.0);

    auto r0 = likelihood_ratio_test(-50.0, -50.0, 1);
    CHECK(r0.statistic == 0.0);
    CHECK(r0.p_value == 1.0);
    auto r1 = likelihood_ratio_test(-48.08, -50.0, 1);
    CHECK(r1.statistic == doctest::Approx(3.84).epsilon(1e-12));
    CHECK(std::fabs(r1.p_value - 0.05) < 5e-4);
    CHECK_THROWS_AS(likelihood_ratio_test(-50.0, -49.0, 1), Error);
}

TEST_CASE("fit basics on shared data") {
    ModelSpec truth = testutil::shared_study_spec();
    const double mu = solve_monitoring_rate(truth, 0.1);

    SUBCASE("init at truth never loses likelihood, and the MLE is stable") {
        Dataset big = generate_dataset(truth, mu, 5000, 7);
        const double ll_init = log_likelihood(truth, big).value;
        FitOptions fo;
        fo.restarts = 1;
        FitResult fr = fit(big, truth, fo);
        CHECK(fr.loglik >= ll_init);
        CHECK(fr.converged);
        CHECK(fr.aic == aic_value(fr.loglik, 5));
        // restarting from the fit's own MLE leaves the value unchanged
        FitResult again = fit(big, fr.model, fo);
        CHECK(std::fabs(again.loglik - fr.loglik) < 1e-4);
    }

    SUBCASE("recovery within four reported standard errors") {
        Dataset data = generate_dataset(truth, mu, 1000, 21);
        FitResult fr = fit(data, default_init(truth, data), FitOptions{});
        REQUIRE(fr.converged);
        REQUIRE(fr.hessian_pd);
        auto tv = pack_natural(truth);
        for (size_t i = 0; i < tv.size(); ++i)
            CHECK(std::fabs(fr.mle[i] - tv[i]) <= 4.0 * fr.se[i]);
    }

    SUBCASE("standard errors shrink like one over root n") {
        double se100 = 0.0, se400 = 0.0;
        for (int s = 0; s < 6; ++s) {
            Dataset d100 = generate_dataset(truth, mu, 100, 500 + s);
            Dataset d400 = generate_dataset(truth, mu, 400, 600 + s);
            FitOptions fo;
            fo.restarts = 1;
            FitResult f100 = fit(d100, default_init(truth, d100), fo);
            FitResult f400 = fit(d400, default_init(truth, d400), fo);
            REQUIRE(f100.hessian_pd);
            REQUIRE(f400.hessian_pd);
            se100 += f100.se.back();
            se400 += f400.se.back();
        }
        CHECK(se400 / se100 > 0.4);
        CHECK(se400 / se100 < 0.6);
    }
}

TEST_CASE("single-cause shared and cause-specific templates agree") {
    ModelSpec truth = testutil::shared_exp_model(0.8, {1.4}, {1.1});
    const double mu = solve_monitoring_rate(truth, 0.15);
    Dataset data = generate_dataset(truth, mu, 400, 3);
    FitOptions fo;
    fo.restarts = 1;
    FitResult shared = fit(data, default_init(truth, data), fo);
    ModelSpec cs_templ = truth;
    cs_templ.frailty = SharedCauseSpecificFrailty{{1.0}};
    FitResult cs = fit(data, default_init(cs_templ, data), fo);
    CHECK(shared.loglik == doctest::Approx(cs.loglik).epsilon(1e-4));
}

TEST_CASE("nested fits dominate: full AIC within 2 dp of restricted") {
    // data from a sigma1 = sigma2 correlated model; the full model is started
    // from the restricted solution so its optimum can only be better
    ModelSpec truth = testutil::correlated_study_spec();
    std::get<CorrelatedFrailty>(truth.frailty) = {0.8, 0.8, 0.6};
    const double mu = solve_monitoring_rate(truth, 0.1);
    for (int s = 0; s < 20; ++s) {
        Dataset data = generate_dataset(truth, mu, 120, 40 + s);
        ModelSpec restricted_templ = truth;
        restricted_templ.tie_correlated_sigmas = true;
        FitOptions fo;
        fo.restarts = 0;
        FitResult restricted = fit(data, default_init(restricted_templ, data), fo);
        ModelSpec full_init = restricted.model;
        full_init.tie_correlated_sigmas = false;
        FitResult full = fit(data, full_init, fo);
        CHECK(full.loglik >= restricted.loglik - 1e-9);
        CHECK(aic_value(full.loglik, 7) <= aic_value(restricted.loglik, 6) + 2.0 + 1e-9);
        auto lrt = likelihood_ratio_test(full.loglik, restricted.loglik, 1);
        CHECK(lrt.p_value >= 0.0);
        CHECK(lrt.p_value <= 1.0);
    }
}

TEST_CASE("non-convergence is reported, not thrown") {
    ModelSpec truth = testutil::shared_study_spec();
    const double mu = solve_monitoring_rate(truth, 0.1);
    Dataset data = generate_dataset(truth, mu, 120, 5);
    FitOptions fo;
    fo.max_iterations = 3;
    fo.restarts = 0;
    FitResult fr = fit(data, default_init(truth, data), fo);
    CHECK(!fr.converged);
}
