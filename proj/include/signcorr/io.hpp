#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "signcorr/data.hpp"
#include "signcorr/highdim.hpp"
#include "signcorr/simulation.hpp"

namespace signcorr {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal digits that round-trip a double; deterministic.
std::string format_double(double v);

// Numeric CSV, '.' decimal separator, optional single header row.
DataMatrix read_csv(const std::string& path, bool header);

// One row per grid cell and estimator:
// scenario,estimator,param_name,param_value,n,reps,successes,mean,bias,
// variance,n_times_variance,mse,mc_se_mean,mc_se_mse
std::string scenario_csv(const ScenarioResult& result);

std::string scenario_json(const ScenarioConfig& config, const ScenarioResult& result);

std::string manifest_json(const std::string& command, const ScenarioConfig& config,
                          const ScenarioResult& result, double wall_seconds,
                          const std::vector<std::string>& outputs);

// Round trip of scenario_csv for the bundled reader.
std::vector<CellResult> parse_scenario_csv(const std::string& text);

std::string corr_matrix_csv(const CorrMatrix& m);
std::string corr_matrix_sidecar_json(const CorrMatrix& m, double min_eig_before,
                                     double min_eig_after);

// Serialize / parse a ScenarioConfig (versioned schema, JSON).
std::string config_json(const ScenarioConfig& config);
ScenarioConfig parse_config_json(const std::string& text);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace signcorr
