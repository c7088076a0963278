#include "toaloc/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "toaloc/errors.hpp"

namespace toaloc {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw ConfigError("invalid number '" + s + "'");
    }
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid number '" + s + "'");
  }
}

// Explicit --out, else $TOALOC_OUTPUT_DIR/<name>, else empty (stdout).
std::filesystem::path output_path(const RunConfig& cfg, const std::string& default_name) {
  if (!cfg.out.empty()) {
    return cfg.out;
  }
  if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
    return std::filesystem::path(dir) / default_name;
  }
  return {};
}

void emit(const std::string& content, const std::filesystem::path& path, std::ostream& out, std::ostream& log) {
  if (path.empty()) {
    out << content;
    return;
  }
  write_text_atomic(path, content);
  log << "wrote " << path.string() << "\n";
}

void emit_table(const RunConfig& cfg, const ResultTable& table, const std::string& stem, std::ostream& out,
                std::ostream& log) {
  const ResultFormat format = parse_format(cfg.format);
  if (table.rows.empty()) {
    throw DataError("result table is empty");
  }
  emit(format_results(table, format), output_path(cfg, stem + "." + cfg.format), out, log);
}

RunOptions resolve_run_options(const RunConfig& cfg) {
  RunOptions run = cfg.run;
  run.estimators = parse_estimator_list(cfg.estimators);
  run.srmcc.validate();
  return run;
}

void add_scenario_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("-d,--dim", cfg.scenario.dim, "Spatial dimension")->capture_default_str();
  app->add_option("-L,--num-sensors", cfg.scenario.sensors, "Sensor count L")->capture_default_str();
  app->add_option("--region", cfg.scenario.region, "Deployment square/cube side (m)")->capture_default_str();
  app->add_option("--sigma-g2", cfg.scenario.sigma_g2, "Gaussian noise variance (m^2)")->capture_default_str();
  app->add_option("--b", cfg.scenario.b_max, "NLOS bias upper bound (m)")->capture_default_str();
  app->add_option("--l-nlos", cfg.scenario.l_nlos, "Number of NLOS paths")->capture_default_str();
  app->add_option("--seed", cfg.scenario.seed, "Base seed")->capture_default_str();
}

void add_estimator_options(CLI::App* app, RunConfig& cfg, double& fixed_sigma) {
  app->add_option("--gamma", cfg.run.srmcc.gamma, "Convergence tolerance on the position step (m)")
      ->capture_default_str();
  app->add_option("--n-max", cfg.run.srmcc.n_max, "Maximum HQ iterations")->capture_default_str();
  app->add_option("--k-bisect", cfg.run.srmcc.k_bisect, "Bisection step cap")->capture_default_str();
  app->add_option("--fixed-sigma", fixed_sigma, "Use a fixed kernel size (m^2) instead of Silverman's rule");
  app->add_option("--sigma-floor", cfg.run.srmcc.sigma_floor, "Minimum adaptive kernel size (m^2)")
      ->capture_default_str();
  app->add_option("--estimators", cfg.estimators, "Comma list of sr_mcc, sr_ls")->capture_default_str();
  app->add_flag("--no-timing", "Report run times as 0 for reproducible files");
}

void add_output_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("-o,--out", cfg.out, "Output file (default: $" + std::string(kOutputDirEnv) + " or stdout)");
  app->add_option("--format", cfg.format, "csv or json")->capture_default_str();
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  if (spec.empty()) {
    throw ConfigError("empty grid");
  }
  std::vector<double> grid;
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError("grid range must be a:b or a:b:step");
    }
    const double first = to_double(parts[0]);
    const double last = to_double(parts[1]);
    const double step = parts.size() == 3 ? to_double(parts[2]) : 1.0;
    if (!(step > 0.0) || last < first) {
      throw ConfigError("grid range needs first <= last and a positive step");
    }
    const auto n = static_cast<long>(std::floor((last - first) / step + 1e-9));
    if (n > 100000) {
      throw ConfigError("grid too large");
    }
    for (long i = 0; i <= n; ++i) {
      grid.push_back(first + static_cast<double>(i) * step);
    }
  } else {
    for (const std::string& item : split(spec, ',')) {
      grid.push_back(to_double(item));
    }
  }
  return grid;
}

std::vector<Estimator> parse_estimator_list(const std::string& spec) {
  std::vector<Estimator> out;
  for (const std::string& item : split(spec, ',')) {
    if (!item.empty()) {
      out.push_back(parse_estimator(item));
    }
  }
  if (out.empty()) {
    throw ConfigError("no estimators selected");
  }
  return out;
}

std::vector<BenchRow> run_bench(const ScenarioParams& base, const std::vector<int>& sensor_counts, int fixes,
                                const SrMccOptions& opts) {
  if (fixes < 1) {
    throw ConfigError("fixes must be at least 1");
  }
  opts.validate();
  std::vector<BenchRow> rows;
  for (int count : sensor_counts) {
    ScenarioParams params = base;
    params.sensors = count;
    params.validate();

    BenchRow row;
    row.sensors = count;
    row.fixes = fixes;
    double elapsed = 0.0;
    double iterations = 0.0;
    std::vector<Eigen::VectorXd> estimates;
    std::vector<Eigen::VectorXd> truths;
    for (int t = 0; t < fixes; ++t) {
      ScenarioParams trial = params;
      trial.seed = params.seed + static_cast<std::uint64_t>(t);
      const Scenario sc = sample_scenario(trial);
      const RangeSet rs = synthesize_ranges(sc, trial);
      const auto start = std::chrono::steady_clock::now();
      const LocalizationResult res = sr_mcc_localize(sc.sensors, rs.ranges, opts);
      elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      iterations += res.iterations;
      estimates.push_back(res.x_hat);
      truths.push_back(sc.source);
    }
    row.mean_fix_time = elapsed / fixes;
    row.mean_iterations = iterations / fixes;
    row.rmse = rmse(estimates, truths);
    rows.push_back(row);
  }
  return rows;
}

std::string format_bench(const std::vector<BenchRow>& rows) {
  std::string out = "sensors,fixes,mean_fix_time_s,mean_iterations,rmse_m\n";
  for (const BenchRow& r : rows) {
    out += std::to_string(r.sensors) + "," + std::to_string(r.fixes) + "," + format_number(r.mean_fix_time) + "," +
           format_number(r.mean_iterations) + "," + format_number(r.rmse) + "\n";
  }
  return out;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  SweepConfig sweep;
  sweep.base = cfg.scenario;
  sweep.parameter = SweepParameter::kSigmaG2;
  sweep.grid = {cfg.scenario.sigma_g2};
  sweep.trials = cfg.trials;
  sweep.run = resolve_run_options(cfg);
  emit_table(cfg, run_sweep(sweep), "simulate", out, log);
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  SweepConfig sweep;
  sweep.base = cfg.scenario;
  sweep.parameter = parse_parameter(cfg.sweep_param);
  sweep.grid = parse_grid(cfg.grid);
  sweep.trials = cfg.trials;
  sweep.run = resolve_run_options(cfg);
  emit_table(cfg, run_sweep(sweep), "sweep", out, log);
  return kExitOk;
}

int cmd_locate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const RunOptions run = resolve_run_options(cfg);
  const Eigen::MatrixXd sensors = load_sensors(cfg.sensor_file);
  const auto dim = static_cast<int>(sensors.cols());
  const RangeLog range_log = load_range_log(cfg.range_log, static_cast<int>(sensors.rows()), dim);
  std::map<int, Eigen::VectorXd> references;
  if (!cfg.reference_file.empty()) {
    references = load_reference_points(cfg.reference_file);
    for (const auto& [fix, pos] : references) {
      if (pos.size() != dim) {
        throw DataError("reference for fix " + std::to_string(fix) + " has the wrong dimension");
      }
    }
  }
  for (const RejectedFix& r : range_log.rejected) {
    log << "rejected fix " << r.fix_id << ": " << r.reason << "\n";
  }

  std::string table = "fix_id,estimator,x,y";
  table += dim == 3 ? ",z" : "";
  table += ",iterations,fix_time_s\n";

  const std::size_t n_est = run.estimators.size();
  std::vector<std::vector<Eigen::VectorXd>> estimates(n_est);
  std::vector<Eigen::VectorXd> truths;
  std::vector<double> elapsed(n_est, 0.0);
  int located = 0;
  int failed = 0;
  for (const RangeFix& fix : range_log.fixes) {
    Eigen::MatrixXd subset(static_cast<Eigen::Index>(fix.sensor_index.size()), dim);
    for (std::size_t k = 0; k < fix.sensor_index.size(); ++k) {
      subset.row(static_cast<Eigen::Index>(k)) = sensors.row(fix.sensor_index[k]);
    }
    std::vector<LocalizationResult> results;
    std::vector<double> times;
    try {
      for (Estimator e : run.estimators) {
        const auto start = std::chrono::steady_clock::now();
        results.push_back(e == Estimator::kSrMcc ? sr_mcc_localize(subset, fix.ranges, run.srmcc)
                                                 : sr_ls_localize(subset, fix.ranges, run.srmcc.k_bisect));
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        times.push_back(run.measure_time ? dt : 0.0);
      }
    } catch (const NumericalError& ex) {
      log << "fix " << fix.fix_id << " failed: " << ex.what() << "\n";
      ++failed;
      continue;
    }
    ++located;
    const auto ref = references.find(fix.fix_id);
    for (std::size_t e = 0; e < n_est; ++e) {
      table += std::to_string(fix.fix_id) + "," + std::string(estimator_name(run.estimators[e]));
      for (int j = 0; j < dim; ++j) {
        table += "," + format_number(results[e].x_hat(j));
      }
      table += "," + std::to_string(results[e].iterations) + "," + format_number(times[e]) + "\n";
      elapsed[e] += times[e];
      if (ref != references.end()) {
        estimates[e].push_back(results[e].x_hat);
      }
    }
    if (ref != references.end()) {
      truths.push_back(ref->second);
    }
  }
  if (located == 0) {
    log << "no fix could be located\n";
    return range_log.fixes.empty() ? kExitData : kExitNumerical;
  }
  emit(table, output_path(cfg, "locate.csv"), out, log);

  for (std::size_t e = 0; e < n_est; ++e) {
    log << estimator_name(run.estimators[e]) << ": " << located << " fixes, mean run-time "
        << format_number(elapsed[e] / located) << " s";
    if (!truths.empty()) {
      log << ", RMSE " << format_number(rmse(estimates[e], truths)) << " m over " << truths.size() << " fixes";
    }
    log << "\n";
  }
  if (!truths.empty() && !cfg.summary_path.empty()) {
    ResultTable summary;
    summary.parameter = "fix";
    for (std::size_t e = 0; e < n_est; ++e) {
      ResultRow row;
      row.estimator = std::string(estimator_name(run.estimators[e]));
      row.rmse = rmse(estimates[e], truths);
      row.mean_fix_time = elapsed[e] / located;
      row.trials = static_cast<int>(truths.size());
      row.excluded = failed + static_cast<int>(range_log.rejected.size());
      summary.rows.push_back(row);
    }
    write_results(summary, cfg.summary_path, parse_format(cfg.format));
    log << "wrote " << cfg.summary_path.string() << "\n";
  }
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const RunOptions run = resolve_run_options(cfg);
  std::vector<int> counts;
  for (double v : parse_grid(cfg.l_grid)) {
    if (v != std::floor(v) || v < 1) {
      throw ConfigError("sensor counts must be positive integers");
    }
    counts.push_back(static_cast<int>(v));
  }
  const std::vector<BenchRow> rows = run_bench(cfg.scenario, counts, cfg.fixes, run.srmcc);
  emit(format_bench(rows), output_path(cfg, "bench.csv"), out, log);
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  double fixed_sigma = 0.0;

  CLI::App app{"Robust TOA source localization by maximum correntropy on squared ranges"};
  app.require_subcommand(1);

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo run at one parameter point");
  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo runs over a parameter grid");
  CLI::App* locate = app.add_subcommand("locate", "Localize fixes from sensor and range-log files");
  CLI::App* bench = app.add_subcommand("bench", "Per-fix run time versus sensor count");

  for (CLI::App* sub : {simulate, sweep, bench}) {
    add_scenario_options(sub, cfg);
  }
  for (CLI::App* sub : {simulate, sweep, locate, bench}) {
    add_estimator_options(sub, cfg, fixed_sigma);
    add_output_options(sub, cfg);
  }
  for (CLI::App* sub : {simulate, sweep}) {
    sub->add_option("--trials", cfg.trials, "Monte Carlo trials per point")->capture_default_str();
  }
  sweep->add_option("--param", cfg.sweep_param, "sigma-g2, b or l-nlos")->capture_default_str();
  sweep->add_option("--grid", cfg.grid, "a:b, a:b:step, or comma list")->required();
  locate->add_option("--sensor-file", cfg.sensor_file, "Sensor positions (id,x,y[,z])")->required();
  locate->add_option("--range-log", cfg.range_log, "Ranges (fix_id,sensor_id,range_m)")->required();
  locate->add_option("--reference", cfg.reference_file, "Reference positions (fix_id,x,y[,z])");
  locate->add_option("--summary", cfg.summary_path, "Write an RMSE/run-time result file");
  bench->add_option("--l-grid", cfg.l_grid, "Sensor counts")->capture_default_str();
  bench->add_option("--fixes", cfg.fixes, "Fixes per sensor count")->capture_default_str();

  std::vector<const char*> argv;
  for (const std::string& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  cfg.subcommand = chosen->get_name();
  if (chosen->count("--fixed-sigma") > 0) {
    cfg.run.srmcc.fixed_sigma = fixed_sigma;
  }
  cfg.run.measure_time = chosen->count("--no-timing") == 0;

  try {
    if (chosen == simulate) return cmd_simulate(cfg, out, err);
    if (chosen == sweep) return cmd_sweep(cfg, out, err);
    if (chosen == locate) return cmd_locate(cfg, out, err);
    return cmd_bench(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace toaloc
