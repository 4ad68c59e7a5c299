#include "io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace bifrail {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const std::string& origin, const std::string& msg) {
    throw Error(ErrorCode::parse, origin + ": " + msg);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double require_number(const json& j, const char* key, const std::string& origin) {
    if (!j.contains(key)) parse_error(origin, std::string("missing field '") + key + "'");
    if (!j[key].is_number()) parse_error(origin, std::string("field '") + key + "' must be a number");
    return j[key].get<double>();
}

HazardSpec parse_hazard(const json& j, const std::string& origin) {
    HazardSpec h;
    if (!j.contains("family") || !j["family"].is_string())
        parse_error(origin, "hazard needs a 'family' string");
    auto fam = hazard_family_from_name(j["family"].get<std::string>());
    if (!fam)
        parse_error(origin, "unknown hazard family '" + j["family"].get<std::string>() +
                                "' (expected exponential, weibull, gamma, loglogistic, "
                                "weibull-gompertz)");
    h.family = *fam;
    h.alpha = require_number(j, "alpha", origin);
    if (h.family == HazardFamily::exponential) {
        h.gamma = 1.0;
        if (j.contains("gamma") && j["gamma"].get<double>() != 1.0)
            parse_error(origin, "exponential hazard has gamma fixed to 1");
    } else {
        h.gamma = require_number(j, "gamma", origin);
    }
    return h;
}

FrailtySpec parse_frailty(const json& j, int l, const std::string& origin, bool* tie) {
    if (!j.contains("variant") || !j["variant"].is_string())
        parse_error(origin, "frailty needs a 'variant' string");
    const std::string v = j["variant"].get<std::string>();
    *tie = j.value("tie_sigmas", false);
    if (v == "shared") return SharedFrailty{require_number(j, "sigma", origin)};
    if (v == "correlated")
        return CorrelatedFrailty{require_number(j, "sigma1", origin),
                                 require_number(j, "sigma2", origin),
                                 require_number(j, "rho", origin)};
    if (v == "shared-cause-specific") {
        if (!j.contains("sigmas") || !j["sigmas"].is_array())
            parse_error(origin, "shared-cause-specific frailty needs a 'sigmas' array");
        SharedCauseSpecificFrailty f;
        for (const auto& s : j["sigmas"]) f.sigmas.push_back(s.get<double>());
        if ((int)f.sigmas.size() != l)
            parse_error(origin, "need exactly L=" + std::to_string(l) + " sigmas");
        return f;
    }
    if (v == "correlated-cause-specific") {
        if (!j.contains("causes") || !j["causes"].is_array())
            parse_error(origin, "correlated-cause-specific frailty needs a 'causes' array");
        CorrelatedCauseSpecificFrailty f;
        for (const auto& c : j["causes"])
            f.causes.push_back({require_number(c, "sigma1", origin),
                                require_number(c, "sigma2", origin),
                                require_number(c, "rho", origin)});
        if ((int)f.causes.size() != l)
            parse_error(origin, "need exactly L=" + std::to_string(l) + " cause triples");
        return f;
    }
    parse_error(origin, "unknown frailty variant '" + v + "'");
}

FitOptions parse_fit_options(const json& j, FitOptions base, const std::string& origin) {
    if (j.is_null()) return base;
    if (!j.is_object()) parse_error(origin, "'fit' must be an object");
    base.max_iterations = j.value("max_iterations", base.max_iterations);
    base.tolerance = j.value("tolerance", base.tolerance);
    base.restarts = j.value("restarts", base.restarts);
    base.fd_step = j.value("fd_step", base.fd_step);
    base.seed = j.value("seed", base.seed);
    base.likelihood_rel_tol = j.value("likelihood_rel_tol", base.likelihood_rel_tol);
    if (base.max_iterations < 1 || base.restarts < 0 || !(base.tolerance > 0.0) ||
        !(base.fd_step > 0.0) || !(base.likelihood_rel_tol > 0.0))
        parse_error(origin, "fit options out of range");
    return base;
}

ModelConfig parse_model_json(const json& j, const std::string& origin) {
    ModelConfig cfg;
    cfg.echo = j;
    if (!j.is_object()) parse_error(origin, "top level must be an object");
    if (!j.contains("causes")) parse_error(origin, "missing 'causes'");
    cfg.spec.l1 = (int)require_number(j["causes"], "l1", origin + " causes");
    cfg.spec.l2 = (int)require_number(j["causes"], "l2", origin + " causes");
    if (!j.contains("hazards") || !j["hazards"].is_object())
        parse_error(origin, "missing 'hazards' object");
    const json& hz = j["hazards"];
    for (int k = 1; k <= 2; ++k) {
        const std::string key = "individual" + std::to_string(k);
        if (!hz.contains(key) || !hz[key].is_array())
            parse_error(origin, "hazards." + key + " must be an array");
        auto& vec = (k == 1) ? cfg.spec.hazards1 : cfg.spec.hazards2;
        int jj = 0;
        for (const auto& hj : hz[key])
            vec.push_back(parse_hazard(hj, origin + " hazards." + key + "[" +
                                               std::to_string(jj++) + "]"));
        if ((int)vec.size() != cfg.spec.causes(k))
            parse_error(origin, "hazards." + key + " must list exactly L" + std::to_string(k) +
                                    " entries");
    }
    if (!j.contains("frailty")) parse_error(origin, "missing 'frailty'");
    cfg.spec.frailty =
        parse_frailty(j["frailty"], cfg.spec.l1, origin + " frailty", &cfg.spec.tie_correlated_sigmas);
    cfg.evaluation_only = j.value("allow_infeasible_rho", false);
    cfg.fit = parse_fit_options(j.value("fit", json()), FitOptions{}, origin + " fit");
    try {
        validate_model(cfg.spec, cfg.evaluation_only ? ValidationMode::evaluation
                                                     : ValidationMode::strict);
    } catch (const Error& e) {
        parse_error(origin, e.what());
    }
    return cfg;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ModelConfig parse_model_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        parse_error(origin, e.what());  // nlohmann reports line/column positions
    }
    return parse_model_json(j, origin);
}

ModelConfig read_model_config(const std::string& path) {
    return parse_model_config(read_file(path), path);
}

SimFileConfig read_sim_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        parse_error(path, e.what());
    }
    if (!j.is_object()) parse_error(path, "top level must be an object");
    if (!j.contains("model")) parse_error(path, "missing 'model'");
    ModelConfig mc = parse_model_json(j["model"], path + " model");
    if (mc.evaluation_only)
        parse_error(path, "simulation requires a strictly valid model (no infeasible rho)");
    SimFileConfig out;
    out.echo = j;
    out.config.true_model = mc.spec;
    out.config.p_cen = require_number(j, "p_cen", path);
    out.config.n = (int)require_number(j, "n", path);
    out.config.replicates = (int)require_number(j, "replicates", path);
    out.config.seed = (std::uint64_t)j.value("seed", 1.0);
    out.config.confidence = j.value("confidence", 0.95);
    out.config.threads = (int)j.value("threads", 0.0);
    out.config.fit_options = parse_fit_options(j.value("fit", json()), mc.fit, path + " fit");
    if (!(out.config.p_cen > 0.0 && out.config.p_cen < 1.0))
        parse_error(path, "p_cen must be in (0,1)");
    if (out.config.n < 2) parse_error(path, "n must be >= 2");
    if (out.config.replicates < 1) parse_error(path, "replicates must be >= 1");
    if (!(out.config.confidence > 0.0 && out.config.confidence < 1.0))
        parse_error(path, "confidence must be in (0,1)");
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_positive_double(const std::string& s, const std::string& where) {
    double v;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        parse_error(where, "'" + s + "' is not a number");
    if (!(v > 0.0) || !std::isfinite(v)) parse_error(where, "monitoring time must be > 0");
    return v;
}

int parse_cause(const std::string& s, const std::string& where) {
    int v;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        parse_error(where, "'" + s + "' is not an integer");
    if (v < 0) parse_error(where, "cause index must be >= 0");
    return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, int l1, int l2) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) parse_error(path, "empty file");
    {
        auto hdr = split_csv_line(line);
        if (hdr.size() != 4 || hdr[0] != "x1" || hdr[1] != "x2" || hdr[2] != "j1" || hdr[3] != "j2")
            parse_error(path + " line 1", "expected header 'x1,x2,j1,j2'");
    }
    Dataset data;
    int lineno = 1;
    int seen1 = 0, seen2 = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::string where = path + " line " + std::to_string(lineno);
        auto f = split_csv_line(line);
        if (f.size() != 4) parse_error(where, "expected 4 fields");
        Observation o;
        o.x1 = parse_positive_double(f[0], where);
        o.x2 = parse_positive_double(f[1], where);
        o.j1 = parse_cause(f[2], where);
        o.j2 = parse_cause(f[3], where);
        if (l1 > 0 && o.j1 > l1) parse_error(where, "j1 exceeds declared L1");
        if (l2 > 0 && o.j2 > l2) parse_error(where, "j2 exceeds declared L2");
        seen1 = std::max(seen1, o.j1);
        seen2 = std::max(seen2, o.j2);
        data.observations.push_back(o);
    }
    data.l1 = (l1 > 0) ? l1 : std::max(seen1, 1);
    data.l2 = (l2 > 0) ? l2 : std::max(seen2, 1);
    return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::string out = "x1,x2,j1,j2\n";
    for (const auto& o : data.observations)
        out += format_double(o.x1) + "," + format_double(o.x2) + "," + std::to_string(o.j1) + "," +
               std::to_string(o.j2) + "\n";
    write_text_atomic(path, out);
}

void write_fit_result_json(const FitResult& result, const json& model_echo,
                           const std::string& data_path, std::size_t n_observations,
                           const std::string& path) {
    json j;
    j["schema"] = 1;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["inputs"] = {{"data", data_path},
                   {"n_observations", n_observations},
                   {"model_config", model_echo}};
    json params = json::array();
    for (size_t i = 0; i < result.mle.size(); ++i) {
        json p;
        p["name"] = result.names[i];
        p["estimate"] = result.mle[i];
        if (result.hessian_pd)
            p["se"] = result.se[i];
        else
            p["se"] = nullptr;
        params.push_back(p);
    }
    j["parameters"] = params;
    j["loglik"] = result.loglik;
    j["aic"] = result.aic;
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    j["underflow_warnings"] = result.underflow_warnings;
    j["hessian_pd"] = result.hessian_pd;
    write_text_atomic(path, j.dump(2) + "\n");
}

json read_result_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        parse_error(path, e.what());
    }
}

void write_sim_summary_csv(const SimSummary& summary, const std::string& path) {
    std::string out = "param,truth,bias,sse,ase,cp\n";
    for (const auto& p : summary.params)
        out += p.name + "," + format_double(p.truth) + "," + format_double(p.bias) + "," +
               format_double(p.sse) + "," + format_double(p.ase) + "," + format_double(p.cp) + "\n";
    write_text_atomic(path, out);
}

void write_sim_summary_json(const SimSummary& summary, const json& config_echo,
                            const std::string& path) {
    json j;
    j["schema"] = 1;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["config"] = config_echo;
    j["mu_monitor"] = summary.mu_monitor;
    j["replicates"] = summary.replicates;
    j["converged"] = summary.converged;
    j["se_available"] = summary.se_available;
    j["excluded_fit"] = summary.replicates - summary.converged;
    j["excluded_se"] = summary.replicates - summary.se_available;
    j["sse_single_replicate"] = summary.sse_single_replicate;
    json params = json::array();
    for (const auto& p : summary.params)
        params.push_back({{"param", p.name},
                          {"truth", p.truth},
                          {"bias", p.bias},
                          {"sse", p.sse},
                          {"ase", p.ase},
                          {"cp", p.cp}});
    j["parameters"] = params;
    write_text_atomic(path, j.dump(2) + "\n");
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write " + tmp);
        out << content;
        if (!out.flush()) throw Error(ErrorCode::io, "write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io, "rename to " + path + " failed: " + ec.message());
}

}  // namespace bifrail
