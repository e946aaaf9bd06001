#include "signcorr/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signcorr/estimators.hpp"
#include "signcorr/version.hpp"

namespace signcorr {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& token, std::size_t line_no, std::size_t col_no) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError("CSV parse error at line " + std::to_string(line_no) + ", column " +
                  std::to_string(col_no) + ": not a number: '" + token + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  if (v == std::rint(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  // Shortest representation that round-trips.
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

DataMatrix read_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t p = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header && line_no == 1) continue;
    if (line.empty() || line == "\r") continue;
    const auto tokens = split(line, ',');
    std::vector<double> row;
    row.reserve(tokens.size());
    for (std::size_t c = 0; c < tokens.size(); ++c) {
      row.push_back(parse_double(tokens[c], line_no, c + 1));
    }
    if (p == 0) {
      p = row.size();
    } else if (row.size() != p) {
      throw IoError("CSV parse error at line " + std::to_string(line_no) +
                    ": expected " + std::to_string(p) + " columns, found " +
                    std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("input file has no data rows: " + path);
  if (p < 2) throw IoError("input needs at least two numeric columns: " + path);
  return DataMatrix::from_rows(rows);
}

namespace {

void append_cell_row(std::string& out, std::string_view scenario, const CellResult& cell) {
  out.append(scenario);
  out.push_back(',');
  out.append(estimator_info(cell.estimator).name);
  out.push_back(',');
  out.append(cell.param_name);
  out.push_back(',');
  out.append(format_double(cell.param_value));
  out.push_back(',');
  out.append(std::to_string(cell.n));
  out.push_back(',');
  out.append(std::to_string(cell.reps));
  out.push_back(',');
  out.append(std::to_string(cell.successes));
  for (double v : {cell.mean, cell.bias, cell.variance, cell.n_times_variance, cell.mse,
                   cell.mc_se_mean, cell.mc_se_mse}) {
    out.push_back(',');
    out.append(format_double(v));
  }
  out.push_back('\n');
}

}  // namespace

std::string scenario_csv(const ScenarioResult& result) {
  std::string out =
      "scenario,estimator,param_name,param_value,n,reps,successes,mean,bias,variance,"
      "n_times_variance,mse,mc_se_mean,mc_se_mse\n";
  for (const CellResult& cell : result.cells) {
    append_cell_row(out, scenario_name(result.scenario), cell);
  }
  return out;
}

std::vector<CellResult> parse_scenario_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<CellResult> cells;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;  // header
    const auto tokens = split(line, ',');
    if (tokens.size() != 14) {
      throw IoError("result CSV: bad column count at line " + std::to_string(line_no));
    }
    CellResult cell;
    const EstimatorDef* def = find_estimator(tokens[1]);
    if (!def) throw IoError("result CSV: unknown estimator '" + tokens[1] + "'");
    cell.estimator = def->id;
    cell.param_name = tokens[2];
    cell.param_value = parse_double(tokens[3], line_no, 4);
    cell.n = static_cast<int>(parse_double(tokens[4], line_no, 5));
    cell.reps = static_cast<int>(parse_double(tokens[5], line_no, 6));
    cell.successes = static_cast<int>(parse_double(tokens[6], line_no, 7));
    const auto num = [&](std::size_t idx) {
      return tokens[idx] == "nan" ? std::nan("") : parse_double(tokens[idx], line_no, idx + 1);
    };
    cell.mean = num(7);
    cell.bias = num(8);
    cell.variance = num(9);
    cell.n_times_variance = num(10);
    cell.mse = num(11);
    cell.mc_se_mean = num(12);
    cell.mc_se_mse = num(13);
    cells.push_back(std::move(cell));
  }
  return cells;
}

namespace {

ordered_json cell_to_json(std::string_view scenario, const CellResult& cell) {
  ordered_json j;
  j["scenario"] = std::string(scenario);
  j["estimator"] = std::string(estimator_info(cell.estimator).name);
  j["param_name"] = cell.param_name;
  j["param_value"] = cell.param_value;
  j["n"] = cell.n;
  j["reps"] = cell.reps;
  j["successes"] = cell.successes;
  const auto set_num = [&](const char* key, double v) {
    if (std::isnan(v)) {
      j[key] = nullptr;
    } else {
      j[key] = v;
    }
  };
  set_num("mean", cell.mean);
  set_num("bias", cell.bias);
  set_num("variance", cell.variance);
  set_num("n_times_variance", cell.n_times_variance);
  set_num("mse", cell.mse);
  set_num("mc_se_mean", cell.mc_se_mean);
  set_num("mc_se_mse", cell.mc_se_mse);
  return j;
}

// The worker count is execution metadata, not part of the experiment:
// leaving it out keeps result/config JSON byte-identical across runs
// with different parallelism. The manifest records it separately.
ordered_json config_to_json(const ScenarioConfig& config) {
  ordered_json j;
  j["schema_version"] = 1;
  j["scenario"] = std::string(scenario_name(config.scenario));
  j["reps"] = config.reps;
  j["seed"] = config.seed;
  ordered_json grid = ordered_json::array();
  for (const GridPoint& gp : config.grid) {
    ordered_json g;
    g["param_name"] = gp.param_name;
    g["param_value"] = gp.param_value;
    g["n"] = gp.n;
    g["rho"] = gp.rho;
    g["truth"] = gp.truth;
    grid.push_back(std::move(g));
  }
  j["grid"] = std::move(grid);
  ordered_json est = ordered_json::array();
  for (EstimatorId id : config.estimators) est.push_back(std::string(estimator_info(id).name));
  j["estimators"] = std::move(est);
  j["contam_sigma"] = {config.contam_sigma.s11, config.contam_sigma.s12,
                       config.contam_sigma.s22};
  return j;
}

}  // namespace

std::string config_json(const ScenarioConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

ScenarioConfig parse_config_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  // A manifest embeds the config under "config"; accept both layouts.
  if (j.contains("config")) j = j["config"];

  ScenarioConfig config;
  config.estimators.clear();
  try {
    if (j.value("schema_version", 1) != 1) {
      throw ConfigError("config: unsupported schema_version");
    }
    const std::string scenario_str = j.at("scenario").get<std::string>();
    const auto scenario = scenario_from_name(scenario_str);
    if (!scenario) throw ConfigError("config: unknown scenario '" + scenario_str + "'");
    config.scenario = *scenario;
    config.reps = j.value("reps", 2000);
    config.seed = j.value("seed", static_cast<std::uint64_t>(20240901));
    config.workers = j.value("workers", 0);
    for (const auto& g : j.at("grid")) {
      GridPoint gp;
      gp.param_name = g.at("param_name").get<std::string>();
      gp.param_value = g.at("param_value").get<double>();
      gp.n = g.at("n").get<int>();
      gp.rho = g.at("rho").get<double>();
      gp.truth = g.at("truth").get<double>();
      config.grid.push_back(std::move(gp));
    }
    for (const auto& name : j.at("estimators")) {
      const EstimatorDef* def = find_estimator(name.get<std::string>());
      if (!def) {
        throw ConfigError("config: unknown estimator '" + name.get<std::string>() + "'");
      }
      config.estimators.push_back(def->id);
    }
    if (j.contains("contam_sigma")) {
      const auto& s = j["contam_sigma"];
      config.contam_sigma = {s.at(0).get<double>(), s.at(1).get<double>(),
                             s.at(2).get<double>()};
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (config.grid.empty()) throw ConfigError("config: grid must not be empty");
  if (config.estimators.empty()) throw ConfigError("config: estimators must not be empty");
  if (config.reps < 1) throw ConfigError("config: reps must be >= 1");
  return config;
}

std::string scenario_json(const ScenarioConfig& config, const ScenarioResult& result) {
  ordered_json j;
  j["config"] = config_to_json(config);
  ordered_json cells = ordered_json::array();
  for (const CellResult& cell : result.cells) {
    cells.push_back(cell_to_json(scenario_name(result.scenario), cell));
  }
  j["cells"] = std::move(cells);
  j["total_failures"] = result.total_failures;
  return j.dump(2) + "\n";
}

std::string manifest_json(const std::string& command, const ScenarioConfig& config,
                          const ScenarioResult& result, double wall_seconds,
                          const std::vector<std::string>& outputs) {
  ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["seed"] = config.seed;
  j["workers"] = config.workers;
  j["config"] = config_to_json(config);
  j["wall_clock_seconds"] = wall_seconds;
  j["outputs"] = outputs;
  ordered_json failures = ordered_json::array();
  for (const CellResult& cell : result.cells) {
    if (cell.successes != cell.reps) {
      ordered_json f;
      f["estimator"] = std::string(estimator_info(cell.estimator).name);
      f["param_name"] = cell.param_name;
      f["param_value"] = cell.param_value;
      f["failures"] = cell.reps - cell.successes;
      failures.push_back(std::move(f));
    }
  }
  j["cell_failures"] = std::move(failures);
  return j.dump(2) + "\n";
}

std::string corr_matrix_csv(const CorrMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.p; ++i) {
    for (std::size_t j = 0; j < m.p; ++j) {
      if (j) out.push_back(',');
      out.append(format_double(m.at(i, j)));
    }
    out.push_back('\n');
  }
  return out;
}

std::string corr_matrix_sidecar_json(const CorrMatrix& m, double min_eig_before,
                                     double min_eig_after) {
  ordered_json j;
  j["p"] = m.p;
  j["psd_repaired"] = m.psd_repaired;
  j["min_eigenvalue_before"] = min_eig_before;
  j["min_eigenvalue_after"] = min_eig_after;
  ordered_json warnings = ordered_json::array();
  for (const PairWarning& w : m.warnings) {
    ordered_json e;
    e["i"] = w.i;
    e["j"] = w.j;
    e["message"] = w.message;
    warnings.push_back(std::move(e));
  }
  j["degenerate_pairs"] = std::move(warnings);
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace signcorr
