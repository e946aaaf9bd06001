#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signcorr/data.hpp"
#include "signcorr/distributions.hpp"
#include "signcorr/estimators.hpp"
#include "signcorr/rng.hpp"

namespace signcorr {

enum class Scenario {
  NormalBiasVar,
  TnuMSE,
  PowerExpMSE,
  SingleOutlier,
  ReplacementContamination,
  SkewedExp,
};

std::string_view scenario_name(Scenario s);
std::optional<Scenario> scenario_from_name(std::string_view name);

struct GridPoint {
  std::string param_name;
  double param_value = 0.0;
  int n = 100;
  double rho = 0.5;   // model correlation
  double truth = 0.5; // aggregation target (0 for sensitivity curves)
};

struct ScenarioConfig {
  Scenario scenario = Scenario::TnuMSE;
  std::vector<GridPoint> grid;
  std::vector<EstimatorId> estimators;
  int reps = 2000;
  std::uint64_t seed = 20240901;
  int workers = 0;  // 0 = hardware concurrency
  SymMat2 contam_sigma = sigma_from_rho(-0.5, 4.0, 4.0);
};

struct CellResult {
  std::string param_name;
  double param_value = 0.0;
  EstimatorId estimator = EstimatorId::Pearson;
  int n = 0;
  int reps = 0;
  int successes = 0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double n_times_variance = 0.0;
  double mse = 0.0;
  double mc_se_mean = 0.0;
  double mc_se_mse = 0.0;
};

struct ScenarioResult {
  Scenario scenario = Scenario::TnuMSE;
  std::vector<CellResult> cells;  // grid-major, estimators in config order
  int total_failures = 0;
};

struct AggregateRow {
  int count = 0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double mc_se_mean = 0.0;
  double mc_se_mse = 0.0;
};

// Mean / bias / sample variance / MSE about the truth, with Monte Carlo
// standard errors, accumulated by compensated summation in input order.
AggregateRow aggregate(std::span<const double> estimates, double truth);

// Substream derivation for one replication of one grid cell; injective
// over the whole experiment plan.
SeedSpec derive_seed(const SeedSpec& master, std::uint64_t scenario_id,
                     std::uint64_t grid_index, std::uint64_t replication_index);

// Runs every (grid point x replication x estimator) cell. Replications
// are distributed over a worker pool; results are deterministic for a
// fixed seed regardless of the worker count, because every replication
// seeds its own substreams and aggregation happens in replication order.
ScenarioResult run_scenario(const ScenarioConfig& config);

// Difference estimate(shifted) - estimate(base) per h; throws nothing,
// missing points (estimator failures) are NaN.
std::vector<double> sensitivity_curve(const DataMatrix& base_data, EstimatorId estimator,
                                      std::span<const double> h_grid, const SeedSpec& seed);

// Paper grids: table2, fig3, fig4, fig5, fig6, fig7.
ScenarioConfig preset_config(std::string_view preset);

}  // namespace signcorr
