#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperlat/estimator.hpp"

namespace hyperlat {

// Configuration/schema failure; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Parses and fully validates an experiment config. Unknown keys are
// rejected; error messages carry the offending field path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical JSON echo of a config (used for the manifest and its hash).
nlohmann::json config_to_json(const ExperimentConfig& cfg);

std::string config_hash(const nlohmann::json& j);

// curve.csv with the columns r,mean_count,variance,sigma,stderr,replicas.
void write_curve_csv(const std::string& path, const VarianceCurve& curve);

nlohmann::json make_manifest(const ExperimentConfig& cfg, const VarianceCurve& curve,
                             double wall_seconds);

void write_json_file(const std::string& path, const nlohmann::json& j);

// Deterministic shortest-round-trip-style formatting for CSV payloads.
std::string format_double(double v);

// Named sigma-tilde profile "inv_log": 1/log(e + r), tabulated at 1..n+1.
std::vector<double> sigma_tilde_inv_log(std::int64_t n_max);

}  // namespace hyperlat
