#include "signcorr/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "signcorr/errors.hpp"

namespace signcorr {

namespace {

constexpr std::uint64_t kDataTag = 0;
constexpr std::uint64_t kContamTag = 1;
constexpr std::uint64_t kEstimatorTagBase = 100;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ScenarioNameEntry {
  Scenario scenario;
  std::string_view name;
};

constexpr ScenarioNameEntry kScenarioNames[] = {
    {Scenario::NormalBiasVar, "normal_bias_var"},
    {Scenario::TnuMSE, "t_nu_mse"},
    {Scenario::PowerExpMSE, "power_exp_mse"},
    {Scenario::SingleOutlier, "single_outlier"},
    {Scenario::ReplacementContamination, "replacement_contamination"},
    {Scenario::SkewedExp, "skewed_exp"},
};

DataMatrix scenario_sample(const ScenarioConfig& config, const GridPoint& gp,
                           const SeedSpec& rep_seed) {
  const SeedSpec data_seed = rep_seed.derive(kDataTag);
  const std::size_t n = static_cast<std::size_t>(gp.n);
  switch (config.scenario) {
    case Scenario::NormalBiasVar:
    case Scenario::SingleOutlier:
    case Scenario::ReplacementContamination:
      return sample_normal2(sigma_from_rho(gp.rho, 1.0, 1.0), n, data_seed);
    case Scenario::TnuMSE:
      return sample_t2(sigma_from_rho(gp.rho, 1.0, 1.0), gp.param_value, n, data_seed);
    case Scenario::PowerExpMSE:
      return sample_powerexp2(sigma_from_rho(gp.rho, 1.0, 1.0), gp.param_value, n,
                              data_seed);
    case Scenario::SkewedExp:
      return sample_skewed_exp(gp.rho, n, data_seed);
  }
  throw std::logic_error("scenario_sample: unknown scenario");
}

// Degeneracy, non-convergence and per-sample applicability limits (an
// estimator needing more observations than the cell provides) count as
// recorded failures; anything else propagates.
double run_estimator_or_nan(const EstimatorDef& def, const DataMatrix& data,
                            const SeedSpec& seed) {
  try {
    return def.run(data, seed).value;
  } catch (const DegeneracyError&) {
    return kNaN;
  } catch (const ConvergenceError&) {
    return kNaN;
  } catch (const std::domain_error&) {
    return kNaN;
  }
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(r) for r in [0, reps) on `workers` threads. Any non-estimator
// exception is rethrown on the calling thread.
void parallel_reps(int reps, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || reps <= 1) {
    for (int r = 0; r < reps; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int count = std::min(workers, reps);
  pool.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int r = next.fetch_add(1, std::memory_order_relaxed);
        if (r >= reps) return;
        try {
          fn(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  for (const auto& e : kScenarioNames) {
    if (e.scenario == s) return e.name;
  }
  return "unknown";
}

std::optional<Scenario> scenario_from_name(std::string_view name) {
  for (const auto& e : kScenarioNames) {
    if (e.name == name) return e.scenario;
  }
  return std::nullopt;
}

AggregateRow aggregate(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw std::domain_error("aggregate: empty input");
  for (double x : estimates) {
    if (!std::isfinite(x)) throw std::domain_error("aggregate: non-finite estimate");
  }
  const int count = static_cast<int>(estimates.size());
  const double r = static_cast<double>(count);

  AggregateRow row;
  row.count = count;
  row.mean = stable_sum(estimates) / r;
  row.bias = row.mean - truth;

  std::vector<double> work(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - row.mean;
    work[i] = d * d;
  }
  row.variance = (count > 1) ? stable_sum(work) / (r - 1.0) : kNaN;

  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - truth;
    work[i] = d * d;
  }
  row.mse = stable_sum(work) / r;

  row.mc_se_mean = (count > 1) ? std::sqrt(row.variance / r) : kNaN;
  if (count > 1) {
    // Jackknife over replications; for a mean of squared errors this
    // reduces to the classic standard error of that mean.
    for (double& d : work) {
      const double c = d - row.mse;
      d = c * c;
    }
    row.mc_se_mse = std::sqrt(stable_sum(work) / (r - 1.0) / r);
  } else {
    row.mc_se_mse = kNaN;
  }
  return row;
}

SeedSpec derive_seed(const SeedSpec& master, std::uint64_t scenario_id,
                     std::uint64_t grid_index, std::uint64_t replication_index) {
  return master.derive(scenario_id).derive(grid_index).derive(replication_index);
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  if (config.reps < 1) throw std::domain_error("run_scenario: reps must be >= 1");
  if (config.grid.empty()) throw std::domain_error("run_scenario: empty grid");
  if (config.estimators.empty()) throw std::domain_error("run_scenario: no estimators");

  std::vector<const EstimatorDef*> defs;
  defs.reserve(config.estimators.size());
  for (EstimatorId id : config.estimators) defs.push_back(&estimator_info(id));

  const int workers = resolve_workers(config.workers);
  const std::size_t n_est = defs.size();
  const SeedSpec master(config.seed);
  const auto scenario_id = static_cast<std::uint64_t>(config.scenario);

  ScenarioResult result;
  result.scenario = config.scenario;
  std::vector<double> estimates;
  std::vector<double> column;

  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    const GridPoint& gp = config.grid[g];
    estimates.assign(static_cast<std::size_t>(config.reps) * n_est, kNaN);

    parallel_reps(config.reps, workers, [&](int r) {
      const SeedSpec rep_seed =
          derive_seed(master, scenario_id, g, static_cast<std::uint64_t>(r));
      const DataMatrix data = scenario_sample(config, gp, rep_seed);

      if (config.scenario == Scenario::SingleOutlier) {
        const DataMatrix shifted = contaminate_shift(data, gp.param_value);
        for (std::size_t e = 0; e < n_est; ++e) {
          const SeedSpec est_seed = rep_seed.derive(kEstimatorTagBase + e);
          const double base = run_estimator_or_nan(*defs[e], data, est_seed);
          const double contaminated = run_estimator_or_nan(*defs[e], shifted, est_seed);
          estimates[static_cast<std::size_t>(r) * n_est + e] = contaminated - base;
        }
        return;
      }

      const DataMatrix* sample = &data;
      DataMatrix replaced;
      if (config.scenario == Scenario::ReplacementContamination) {
        replaced = contaminate_replace(data, static_cast<std::size_t>(gp.param_value),
                                       config.contam_sigma, rep_seed.derive(kContamTag));
        sample = &replaced;
      }
      for (std::size_t e = 0; e < n_est; ++e) {
        const SeedSpec est_seed = rep_seed.derive(kEstimatorTagBase + e);
        estimates[static_cast<std::size_t>(r) * n_est + e] =
            run_estimator_or_nan(*defs[e], *sample, est_seed);
      }
    });

    for (std::size_t e = 0; e < n_est; ++e) {
      column.clear();
      int failures = 0;
      for (int r = 0; r < config.reps; ++r) {
        const double v = estimates[static_cast<std::size_t>(r) * n_est + e];
        if (std::isnan(v)) {
          ++failures;
        } else {
          column.push_back(v);
        }
      }
      CellResult cell;
      cell.param_name = gp.param_name;
      cell.param_value = gp.param_value;
      cell.estimator = defs[e]->id;
      cell.n = gp.n;
      cell.reps = config.reps;
      cell.successes = config.reps - failures;
      if (!column.empty()) {
        const AggregateRow row = aggregate(column, gp.truth);
        cell.mean = row.mean;
        cell.bias = row.bias;
        cell.variance = row.variance;
        cell.n_times_variance = static_cast<double>(gp.n) * row.variance;
        cell.mse = row.mse;
        cell.mc_se_mean = row.mc_se_mean;
        cell.mc_se_mse = row.mc_se_mse;
      } else {
        cell.mean = cell.bias = cell.variance = cell.n_times_variance = kNaN;
        cell.mse = cell.mc_se_mean = cell.mc_se_mse = kNaN;
      }
      result.total_failures += failures;
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::vector<double> sensitivity_curve(const DataMatrix& base_data, EstimatorId estimator,
                                      std::span<const double> h_grid, const SeedSpec& seed) {
  const EstimatorDef& def = estimator_info(estimator);
  const double base = run_estimator_or_nan(def, base_data, seed);
  std::vector<double> curve(h_grid.size(), kNaN);
  if (std::isnan(base)) return curve;
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    const double shifted =
        run_estimator_or_nan(def, contaminate_shift(base_data, h_grid[i]), seed);
    curve[i] = shifted - base;
  }
  return curve;
}

ScenarioConfig preset_config(std::string_view preset) {
  ScenarioConfig config;
  for (const auto& def : estimator_registry()) {
    if (def.in_all) config.estimators.push_back(def.id);
  }

  const auto grid_point = [](std::string param, double value, int n, double rho,
                             double truth) {
    GridPoint gp;
    gp.param_name = std::move(param);
    gp.param_value = value;
    gp.n = n;
    gp.rho = rho;
    gp.truth = truth;
    return gp;
  };

  if (preset == "table2") {
    config.scenario = Scenario::TnuMSE;
    for (double rho : {0.0, 0.5}) {
      const std::string name = (rho == 0.0) ? "nu:rho=0" : "nu:rho=0.5";
      for (double nu : {1.0, 2.0, 5.0, 10.0}) {
        config.grid.push_back(grid_point(name, nu, 100, rho, rho));
      }
    }
  } else if (preset == "fig3") {
    config.scenario = Scenario::NormalBiasVar;
    for (int n : {5, 10, 15, 20, 30, 40, 50, 60, 70, 80, 90, 100}) {
      config.grid.push_back(grid_point("n", n, n, 0.5, 0.5));
    }
  } else if (preset == "fig4") {
    config.scenario = Scenario::PowerExpMSE;
    // 56 log-spaced (non-equidistant) steps from 0.02 to 2.
    for (int i = 0; i < 56; ++i) {
      const double alpha = 0.02 * std::pow(100.0, static_cast<double>(i) / 55.0);
      config.grid.push_back(grid_point("alpha", alpha, 100, 0.5, 0.5));
    }
  } else if (preset == "fig5") {
    config.scenario = Scenario::SingleOutlier;
    for (int i = 0; i <= 20; ++i) {
      config.grid.push_back(grid_point("h", 0.25 * i, 100, 0.5, 0.0));
    }
    config.reps = 1;  // one clean base draw; raise --reps to average
  } else if (preset == "fig6") {
    config.scenario = Scenario::ReplacementContamination;
    for (int m = 0; m <= 50; m += 5) {
      config.grid.push_back(grid_point("m", m, 100, 0.5, 0.5));
    }
  } else if (preset == "fig7") {
    config.scenario = Scenario::SkewedExp;
    for (int i = 0; i <= 9; ++i) {
      const double rho = 0.1 * i;
      config.grid.push_back(grid_point("rho", rho, 100, rho, rho));
    }
  } else {
    throw std::domain_error("unknown preset: " + std::string(preset));
  }
  return config;
}

}  // namespace signcorr
