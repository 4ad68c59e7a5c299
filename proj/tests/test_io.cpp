#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "errors.hpp"
#include "helpers.hpp"
#include "io.hpp"

using namespace bifrail;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("bifrail_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Cause-pair counts of the published bilateral hearing-loss screening
// summary (796 pairs, three causes). The ages written by the fixture are
// synthetic -- the real ages are not public -- only the (j1,j2) frequency
// table is reproduced.
constexpr int kHearingCounts[4][4] = {
    {261, 0, 1, 0}, {0, 435, 0, 7}, {1, 0, 28, 2}, {0, 7, 1, 53}};

std::string hearing_fixture_csv() {
    std::string out = "x1,x2,j1,j2\n";
    int row = 0;
    for (int j1 = 0; j1 <= 3; ++j1)
        for (int j2 = 0; j2 <= 3; ++j2)
            for (int c = 0; c < kHearingCounts[j1][j2]; ++c) {
                const double age = 6.0 + 0.25 * (row % 800);  // synthetic months
                out += format_double(age) + "," + format_double(age) + "," +
                       std::to_string(j1) + "," + std::to_string(j2) + "\n";
                ++row;
            }
    return out;
}

const char* kSharedConfig = R"({
  "causes": {"l1": 2, "l2": 2},
  "hazards": {
    "individual1": [{"family": "exponential", "alpha": 2.4},
                    {"family": "exponential", "alpha": 5.8}],
    "individual2": [{"family": "exponential", "alpha": 3.5},
                    {"family": "exponential", "alpha": 4.5}]
  },
  "frailty": {"variant": "shared", "sigma": 0.95},
  "fit": {"max_iterations": 500, "restarts": 1, "seed": 7}
})";

}  // namespace

TEST_CASE("dataset csv reading") {
    TempDir tmp;
    SUBCASE("small file with inferred cause counts") {
        write_file(tmp.file("a.csv"), "x1,x2,j1,j2\n12.0,12.0,1,1\n30.5,30.5,0,0\n");
        Dataset d = read_dataset_csv(tmp.file("a.csv"));
        CHECK(d.observations.size() == 2);
        CHECK(d.l1 == 1);
        CHECK(d.l2 == 1);
        CHECK(d.observations[0].x1 == 12.0);
        CHECK(d.observations[1].j1 == 0);
    }
    SUBCASE("crlf and blank lines are tolerated") {
        write_file(tmp.file("b.csv"), "x1,x2,j1,j2\r\n1.5,2.5,1,0\r\n\r\n");
        Dataset d = read_dataset_csv(tmp.file("b.csv"));
        CHECK(d.observations.size() == 1);
        CHECK(d.observations[0].x2 == 2.5);
    }
    SUBCASE("errors carry 1-based line numbers") {
        write_file(tmp.file("c.csv"), "x1,x2,j1,j2\n1.0,1.0,1,1\n1.0,1.0,4,1\n");
        try {
            read_dataset_csv(tmp.file("c.csv"), 3, 3);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::parse);
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
        write_file(tmp.file("d.csv"), "x1,x2,j1,j2\n-1.0,1.0,1,1\n");
        CHECK_THROWS_AS(read_dataset_csv(tmp.file("d.csv")), Error);
        write_file(tmp.file("e.csv"), "x1,x2,j1,j2\n1.0,abc,1,1\n");
        CHECK_THROWS_AS(read_dataset_csv(tmp.file("e.csv")), Error);
        write_file(tmp.file("f.csv"), "t1,t2,j1,j2\n");
        CHECK_THROWS_AS(read_dataset_csv(tmp.file("f.csv")), Error);
    }
    SUBCASE("writer then reader is the identity") {
        testutil::TestRng rng(61);
        Dataset d;
        d.l1 = 2;
        d.l2 = 3;
        for (int i = 0; i < 40; ++i)
            d.observations.push_back({rng.uniform(1e-4, 37.0), rng.uniform(1e-4, 37.0),
                                      rng.index(3), rng.index(4)});
        write_dataset_csv(d, tmp.file("rt.csv"));
        Dataset back = read_dataset_csv(tmp.file("rt.csv"), 2, 3);
        REQUIRE(back.observations.size() == d.observations.size());
        for (size_t i = 0; i < d.observations.size(); ++i) {
            CHECK(back.observations[i].x1 == d.observations[i].x1);
            CHECK(back.observations[i].x2 == d.observations[i].x2);
            CHECK(back.observations[i].j1 == d.observations[i].j1);
            CHECK(back.observations[i].j2 == d.observations[i].j2);
        }
    }
}

TEST_CASE("hearing-loss frequency fixture parses to the expected counts") {
    TempDir tmp;
    write_file(tmp.file("hearing.csv"), hearing_fixture_csv());
    Dataset d = read_dataset_csv(tmp.file("hearing.csv"));
    CHECK(d.observations.size() == 796);
    CHECK(d.l1 == 3);
    CHECK(d.l2 == 3);
    int counts[4][4] = {};
    for (const auto& o : d.observations) ++counts[o.j1][o.j2];
    for (int a = 0; a <= 3; ++a)
        for (int b = 0; b <= 3; ++b) CHECK(counts[a][b] == kHearingCounts[a][b]);
}

TEST_CASE("model config parsing") {
    ModelConfig cfg = parse_model_config(kSharedConfig, "test");
    CHECK(cfg.spec.l1 == 2);
    CHECK(cfg.spec.hazard(1, 2).alpha == 5.8);
    CHECK(std::get<SharedFrailty>(cfg.spec.frailty).sigma == 0.95);
    CHECK(cfg.fit.max_iterations == 500);
    CHECK(cfg.fit.restarts == 1);
    CHECK(cfg.fit.seed == 7);
    CHECK(cfg.fit.tolerance == FitOptions{}.tolerance);  // default preserved

    SUBCASE("all variants parse") {
        const char* corr = R"({"causes":{"l1":1,"l2":1},
            "hazards":{"individual1":[{"family":"weibull","gamma":1.3,"alpha":0.4}],
                       "individual2":[{"family":"gamma","gamma":0.8,"alpha":0.9}]},
            "frailty":{"variant":"correlated","sigma1":0.9,"sigma2":0.7,"rho":0.6,
                       "tie_sigmas":false}})";
        ModelConfig c2 = parse_model_config(corr, "t2");
        CHECK(frailty_variant(c2.spec.frailty) == FrailtyVariant::correlated);
        const char* scs = R"({"causes":{"l1":2,"l2":2},
            "hazards":{"individual1":[{"family":"exponential","alpha":7},
                                      {"family":"exponential","alpha":6}],
                       "individual2":[{"family":"exponential","alpha":8.5},
                                      {"family":"exponential","alpha":10}]},
            "frailty":{"variant":"shared-cause-specific","sigmas":[0.95,0.85]}})";
        ModelConfig c3 = parse_model_config(scs, "t3");
        CHECK(std::get<SharedCauseSpecificFrailty>(c3.spec.frailty).sigmas[1] == 0.85);
        const char* ccs = R"({"causes":{"l1":2,"l2":2},
            "hazards":{"individual1":[{"family":"exponential","alpha":0.2},
                                      {"family":"exponential","alpha":0.25}],
                       "individual2":[{"family":"exponential","alpha":0.15},
                                      {"family":"exponential","alpha":0.1}],
                       "ignored": 3},
            "frailty":{"variant":"correlated-cause-specific",
                       "causes":[{"sigma1":1.2,"sigma2":0.8,"rho":0.7},
                                 {"sigma1":1.8,"sigma2":0.4,"rho":0.25}]},
            "allow_infeasible_rho": true})";
        ModelConfig c4 = parse_model_config(ccs, "t4");
        CHECK(c4.evaluation_only);
    }
    SUBCASE("violations are parse errors") {
        CHECK_THROWS_AS(parse_model_config("{not json", "x"), Error);
        CHECK_THROWS_AS(parse_model_config(R"({"causes":{"l1":1,"l2":1}})", "x"), Error);
        const char* badfam = R"({"causes":{"l1":1,"l2":1},
            "hazards":{"individual1":[{"family":"lognormal","alpha":1}],
                       "individual2":[{"family":"exponential","alpha":1}]},
            "frailty":{"variant":"shared","sigma":1}})";
        CHECK_THROWS_AS(parse_model_config(badfam, "x"), Error);
        const char* badgamma = R"({"causes":{"l1":1,"l2":1},
            "hazards":{"individual1":[{"family":"exponential","alpha":1,"gamma":1.5}],
                       "individual2":[{"family":"exponential","alpha":1}]},
            "frailty":{"variant":"shared","sigma":1}})";
        CHECK_THROWS_AS(parse_model_config(badgamma, "x"), Error);
        // infeasible rho is rejected without the explicit opt-in
        const char* badrho = R"({"causes":{"l1":1,"l2":1},
            "hazards":{"individual1":[{"family":"exponential","alpha":1}],
                       "individual2":[{"family":"exponential","alpha":1}]},
            "frailty":{"variant":"correlated","sigma1":1,"sigma2":2,"rho":1.5}})";
        CHECK_THROWS_AS(parse_model_config(badrho, "x"), Error);
    }
}

TEST_CASE("sim config parsing") {
    TempDir tmp;
    std::string sim = std::string(R"({"model": )") + kSharedConfig +
                      R"(, "p_cen": 0.1, "n": 300, "replicates": 50, "seed": 42,
                          "fit": {"restarts": 0}})";
    write_file(tmp.file("sim.json"), sim);
    SimFileConfig sc = read_sim_config(tmp.file("sim.json"));
    CHECK(sc.config.p_cen == 0.1);
    CHECK(sc.config.n == 300);
    CHECK(sc.config.replicates == 50);
    CHECK(sc.config.seed == 42);
    CHECK(sc.config.confidence == 0.95);
    // top-level fit overrides the model's block
    CHECK(sc.config.fit_options.restarts == 0);
    CHECK(sc.config.fit_options.max_iterations == 500);

    write_file(tmp.file("bad.json"), std::string(R"({"model": )") + kSharedConfig + "}");
    CHECK_THROWS_AS(read_sim_config(tmp.file("bad.json")), Error);
}

TEST_CASE("fit result file round-trips numerically") {
    TempDir tmp;
    FitResult r;
    r.names = {"alpha_1_1", "sigma"};
    r.mle = {0.12345678901234567, 6.3803e-7};
    r.se = {0.001234, 17.25};
    r.loglik = -1137.0815213402128;
    r.aic = 2284.1630426804256;
    r.converged = true;
    r.hessian_pd = true;
    r.iterations = 321;
    r.underflow_warnings = 2;
    write_fit_result_json(r, nlohmann::json::parse(kSharedConfig), "data.csv", 796,
                          tmp.file("res.json"));
    auto j = read_result_json(tmp.file("res.json"));
    CHECK(j["schema"] == 1);
    CHECK(j["loglik"].get<double>() == r.loglik);
    CHECK(j["aic"].get<double>() == r.aic);
    CHECK(j["parameters"][0]["estimate"].get<double>() == r.mle[0]);
    CHECK(j["parameters"][1]["estimate"].get<double>() == r.mle[1]);
    CHECK(j["parameters"][1]["se"].get<double>() == r.se[1]);
    CHECK(j["inputs"]["n_observations"] == 796);
    CHECK(j["converged"] == true);
}

TEST_CASE("sim summary serialization is deterministic") {
    TempDir tmp;
    SimSummary s;
    s.replicates = 10;
    s.converged = 9;
    s.se_available = 8;
    s.mu_monitor = 0.6317970892544587;
    s.params = {{"sigma", 0.95, -0.0099, 0.09058, 0.0919, 0.95}};
    write_sim_summary_csv(s, tmp.file("s1.csv"));
    write_sim_summary_csv(s, tmp.file("s2.csv"));
    CHECK(slurp(tmp.file("s1.csv")) == slurp(tmp.file("s2.csv")));
    CHECK(slurp(tmp.file("s1.csv")).rfind("param,truth,bias,sse,ase,cp\n", 0) == 0);
    write_sim_summary_json(s, nlohmann::json{{"n", 300}}, tmp.file("s.json"));
    auto j = read_result_json(tmp.file("s.json"));
    CHECK(j["excluded_fit"] == 1);
    CHECK(j["excluded_se"] == 2);
    CHECK(j["parameters"][0]["cp"].get<double>() == 0.95);
}

TEST_CASE("atomic write leaves no temp file") {
    TempDir tmp;
    write_text_atomic(tmp.file("out.txt"), "payload\n");
    CHECK(slurp(tmp.file("out.txt")) == "payload\n");
    CHECK(!fs::exists(tmp.file("out.txt") + ".tmp"));
}
