#pragma once

#include <string>

#include <json.hpp>

#include "simulation.hpp"

namespace bifrail {

inline constexpr const char* kToolName = "bifrail";
inline constexpr const char* kToolVersion = "0.1.0";

struct ModelConfig {
    ModelSpec spec;
    FitOptions fit;
    bool evaluation_only = false;  // allow_infeasible_rho: skip the strict rho bound
    nlohmann::json echo;           // parsed config, echoed into result files
};

ModelConfig parse_model_config(const std::string& text, const std::string& origin);
ModelConfig read_model_config(const std::string& path);

struct SimFileConfig {
    SimConfig config;
    nlohmann::json echo;
};

SimFileConfig read_sim_config(const std::string& path);

// Dataset CSV: header `x1,x2,j1,j2`; l1/l2 = 0 infers cause counts from the
// largest observed index. Malformed rows raise parse errors with the 1-based
// line number.
Dataset read_dataset_csv(const std::string& path, int l1 = 0, int l2 = 0);
void write_dataset_csv(const Dataset& data, const std::string& path);

void write_fit_result_json(const FitResult& result, const nlohmann::json& model_echo,
                           const std::string& data_path, std::size_t n_observations,
                           const std::string& path);
nlohmann::json read_result_json(const std::string& path);

void write_sim_summary_csv(const SimSummary& summary, const std::string& path);
void write_sim_summary_json(const SimSummary& summary, const nlohmann::json& config_echo,
                            const std::string& path);

// temp-file + rename
void write_text_atomic(const std::string& path, const std::string& content);

// 17-significant-digit shortest round-trip decimal, used by every CSV writer
std::string format_double(double v);

}  // namespace bifrail
