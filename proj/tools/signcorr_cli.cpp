// Command-line surface: estimate correlations from CSV files, run the
// Monte Carlo scenarios, and evaluate the asymptotic formulas.
//
// Exit codes: 0 success, 1 partial estimator failure, 2 config error,
// 3 I/O error, 4 every requested estimator failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "signcorr/asymptotics.hpp"
#include "signcorr/errors.hpp"
#include "signcorr/estimators.hpp"
#include "signcorr/highdim.hpp"
#include "signcorr/io.hpp"
#include "signcorr/simulation.hpp"
#include "signcorr/version.hpp"

namespace {

using namespace signcorr;

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitTotalFailure = 4;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t pos = csv.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(csv.substr(start));
      break;
    }
    out.push_back(csv.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<EstimatorId> resolve_estimators(const std::string& spec) {
  std::vector<EstimatorId> ids;
  if (spec == "all") {
    for (const auto& def : estimator_registry()) {
      if (def.in_all) ids.push_back(def.id);
    }
    return ids;
  }
  for (const std::string& name : split_list(spec)) {
    const EstimatorDef* def = find_estimator(name);
    if (!def) throw ConfigError("unknown estimator '" + name + "'");
    ids.push_back(def->id);
  }
  if (ids.empty()) throw ConfigError("no estimators requested");
  return ids;
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("SIGNCORR_SEED");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') {
    throw ConfigError("SIGNCORR_SEED must be an unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

std::string join_args(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd.push_back(' ');
    cmd.append(argv[i]);
  }
  return cmd;
}

int cmd_estimate(const std::string& input, const std::string& estimators_spec, bool header,
                 double level, std::uint64_t seed, const std::string& output) {
  const DataMatrix data = read_csv(input, header);

  if (data.cols() > 2) {
    // Wide input: pairwise matrix with a single estimator.
    const auto ids = resolve_estimators(estimators_spec == "all" ? "spatial_sign"
                                                                 : estimators_spec);
    if (ids.size() != 1) {
      throw ConfigError("matrix mode (p > 2) takes exactly one estimator");
    }
    PairwiseOptions opt;
    opt.estimator = ids.front();
    opt.seed = SeedSpec(seed);
    const CorrMatrix raw = pairwise_corr_matrix(data, opt);
    const double before = min_eigenvalue(raw);
    const CorrMatrix repaired = psd_repair(raw);
    const double after = min_eigenvalue(repaired);
    const std::string csv = corr_matrix_csv(repaired);
    const std::string sidecar = corr_matrix_sidecar_json(repaired, before, after);
    if (output.empty()) {
      std::fputs(csv.c_str(), stdout);
      std::fputs(sidecar.c_str(), stderr);
    } else {
      write_file(output + ".csv", csv);
      write_file(output + ".meta.json", sidecar);
      std::printf("wrote %s.csv and %s.meta.json (p=%zu, %zu degenerate pairs)\n",
                  output.c_str(), output.c_str(), repaired.p, repaired.warnings.size());
    }
    return kExitOk;
  }

  const auto ids = resolve_estimators(estimators_spec);
  const SeedSpec seed_spec(seed);
  std::string table = "estimator,value,ci_low,ci_high,n,status\n";
  int failures = 0;
  std::printf("%-16s %10s %22s   %s\n", "estimator", "estimate", "confidence interval",
              "status");
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const EstimatorDef& def = estimator_info(ids[k]);
    std::string status = "ok";
    std::string ci_text;
    double value = std::nan("");
    std::optional<double> lo, hi;
    try {
      CorrEstimate est = def.run(data, seed_spec.derive(k));
      if (def.id == EstimatorId::SpatialSign || def.id == EstimatorId::SpatialSignTwoStage) {
        est = sscorr_ci(est, static_cast<int>(data.rows()), level,
                        def.id == EstimatorId::SpatialSignTwoStage);
        lo = est.ci_low;
        hi = est.ci_high;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "[%8.5f, %8.5f]", *lo, *hi);
        ci_text = buf;
      }
      value = est.value;
    } catch (const std::exception& e) {
      ++failures;
      status = e.what();
    }
    if (std::isnan(value)) {
      std::printf("%-16s %10s %22s   %s\n", std::string(def.name).c_str(), "-", "",
                  status.c_str());
    } else {
      std::printf("%-16s %10.5f %22s   %s\n", std::string(def.name).c_str(), value,
                  ci_text.c_str(), status.c_str());
    }
    table += std::string(def.name) + "," + (std::isnan(value) ? "nan" : format_double(value)) +
             "," + (lo ? format_double(*lo) : "") + "," + (hi ? format_double(*hi) : "") + "," +
             std::to_string(data.rows()) + "," + (status == "ok" ? "ok" : "failed") + "\n";
  }
  if (!output.empty()) write_file(output, table);
  if (failures == static_cast<int>(ids.size())) return kExitTotalFailure;
  return failures > 0 ? kExitPartialFailure : kExitOk;
}

int cmd_simulate(const std::string& preset, const std::string& config_path, int reps,
                 int workers, std::optional<std::uint64_t> seed_flag,
                 const std::string& estimators_spec, std::string out_prefix,
                 const std::string& command_line) {
  ScenarioConfig config;
  if (!config_path.empty()) {
    config = parse_config_json(read_file(config_path));
  } else if (!preset.empty()) {
    config = preset_config(preset);
  } else {
    throw ConfigError("simulate needs --preset or --config");
  }
  if (reps > 0) config.reps = reps;
  if (workers > 0) config.workers = workers;
  if (!estimators_spec.empty()) config.estimators = resolve_estimators(estimators_spec);
  if (const auto env = env_seed()) config.seed = *env;
  if (seed_flag) config.seed = *seed_flag;

  if (out_prefix.empty()) {
    out_prefix =
        preset.empty() ? std::string(scenario_name(config.scenario)) : std::string(preset);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioResult result = run_scenario(config);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::vector<std::string> outputs{out_prefix + ".csv", out_prefix + ".json",
                                         out_prefix + ".manifest.json"};
  write_file(outputs[0], scenario_csv(result));
  write_file(outputs[1], scenario_json(config, result));
  write_file(outputs[2], manifest_json(command_line, config, result, wall, outputs));
  std::printf("%s: %zu cells, %d replications each, %d failed estimator runs, %.2f s\n",
              std::string(scenario_name(config.scenario)).c_str(), result.cells.size(),
              config.reps, result.total_failures, wall);
  std::printf("wrote %s, %s, %s\n", outputs[0].c_str(), outputs[1].c_str(),
              outputs[2].c_str());
  return kExitOk;
}

void print_mat4_csv(const Mat4& m, std::string* out) {
  for (int i = 0; i < 4; ++i) {
    std::string line;
    for (int j = 0; j < 4; ++j) {
      if (j) line.push_back(',');
      line += format_double(m(i, j));
    }
    line.push_back('\n');
    *out += line;
  }
}

int cmd_theory(const std::string& quantity, double rho, double a, double kappa, double x1,
               double x2, double lambda1, double lambda2, bool grid,
               const std::string& output) {
  std::string out;
  if (quantity == "asv") {
    out = format_double(asv_spatial_corr(rho, a)) + "\n";
  } else if (quantity == "asv2s") {
    out = format_double(asv_two_stage(rho)) + "\n";
  } else if (quantity == "are") {
    if (grid) {
      out = "a,rho,are\n";
      for (double av : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        for (int r = -19; r <= 19; ++r) {
          const double rv = 0.05 * r;
          out += format_double(av) + "," + format_double(rv) + "," +
                 format_double(are_spatial(rv, av, kappa)) + "\n";
        }
      }
    } else {
      out = format_double(are_spatial(rho, a, kappa)) + "\n";
    }
  } else if (quantity == "if") {
    if (grid) {
      out = "theta,if\n";
      for (int k = 0; k <= 360; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / 360.0;
        out += format_double(theta) + "," +
               format_double(if_spatial_corr({std::cos(theta), std::sin(theta)}, a, rho)) +
               "\n";
      }
    } else {
      out = format_double(if_spatial_corr({x1, x2}, a, rho)) + "\n";
    }
  } else if (quantity == "ges") {
    if (grid) {
      out = "rho,ges\n";
      for (int r = -19; r <= 19; ++r) {
        const double rv = 0.05 * r;
        out += format_double(rv) + "," + format_double(ges_spatial_corr(a, rv)) + "\n";
      }
    } else {
      out = format_double(ges_spatial_corr(a, rho)) + "\n";
    }
  } else if (quantity == "ws") {
    print_mat4_csv(ws_matrix(lambda1, lambda2, Mat2::identity()), &out);
  } else if (quantity == "wv0") {
    const AsymptoticCov2 w = wv0_matrix(a, rho);
    out = format_double(w.s11) + "," + format_double(w.s12) + "\n" + format_double(w.s12) +
          "," + format_double(w.s22) + "\n";
  } else {
    throw ConfigError("unknown theory quantity '" + quantity +
                      "' (asv, asv2s, are, if, ges, ws, wv0)");
  }
  if (output.empty()) {
    std::fputs(out.c_str(), stdout);
  } else {
    write_file(output, out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial sign correlation toolkit"};
  app.set_version_flag("--version", std::string("signcorr ") + kVersion);
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate correlations from a numeric CSV");
  std::string input, est_list = "all", est_output;
  bool header = false;
  double level = 0.95;
  std::uint64_t est_seed = 20240901;
  est->add_option("input", input, "CSV file with >= 2 numeric columns")->required();
  est->add_option("--estimators", est_list, "'all' or comma-separated estimator names");
  est->add_flag("--header", header, "input has one header row");
  est->add_option("--level", level, "confidence level for the spatial sign CI");
  est->add_option("--seed", est_seed, "seed for randomized estimators");
  est->add_option("--output", est_output, "write results (CSV table or matrix prefix)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo scenario");
  std::string preset, config_path, sim_out, sim_estimators;
  int reps = 0, workers = 0;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--preset", preset, "table2, fig3, fig4, fig5, fig6 or fig7");
  sim->add_option("--config", config_path, "scenario config JSON (or a manifest)");
  sim->add_option("--reps", reps, "replications per grid point");
  sim->add_option("--workers", workers, "worker threads (default: logical cores)");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--estimators", sim_estimators, "'all' or comma-separated names");
  sim->add_option("--out", sim_out, "output prefix (default: preset name)");

  // theory
  auto* theory = app.add_subcommand("theory", "Evaluate the asymptotic formulas");
  std::string quantity, theory_output;
  double rho = 0.0, a = 1.0, kappa = 0.0, x1 = 1.0, x2 = 1.0;
  double lambda1 = 1.0, lambda2 = 1.0;
  bool grid = false;
  theory->add_option("quantity", quantity, "asv | asv2s | are | if | ges | ws | wv0")
      ->required();
  theory->add_option("--rho", rho, "correlation parameter");
  theory->add_option("--a", a, "root of the shape diagonal ratio");
  theory->add_option("--kappa", kappa, "marginal excess kurtosis (for are)");
  theory->add_option("--x1", x1, "contamination point, first coordinate (for if)");
  theory->add_option("--x2", x2, "contamination point, second coordinate (for if)");
  theory->add_option("--lambda1", lambda1, "larger shape eigenvalue (for ws)");
  theory->add_option("--lambda2", lambda2, "smaller shape eigenvalue (for ws)");
  theory->add_flag("--grid", grid, "emit plot data over a parameter grid");
  theory->add_option("--output", theory_output, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (est->parsed()) {
      return cmd_estimate(input, est_list, header, level, est_seed, est_output);
    }
    if (sim->parsed()) {
      return cmd_simulate(preset, config_path, reps, workers, sim_seed, sim_estimators,
                          sim_out, join_args(argc, argv));
    }
    if (theory->parsed()) {
      return cmd_theory(quantity, rho, a, kappa, x1, x2, lambda1, lambda2, grid,
                        theory_output);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIoError;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIoError;
  }
  return kExitOk;
}
