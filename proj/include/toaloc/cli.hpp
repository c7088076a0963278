#pragma once

// Command-line front end: simulate | sweep | locate | bench.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "toaloc/dataio.hpp"
#include "toaloc/eval.hpp"

namespace toaloc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Directory used for output files when --out is not given.
inline constexpr const char* kOutputDirEnv = "TOALOC_OUTPUT_DIR";

struct RunConfig {
  std::string subcommand;
  ScenarioParams scenario{2, 10, 20.0, 0.1, 5.0, 0, 1};
  int trials = 3000;
  RunOptions run;
  std::string estimators = "sr_mcc,sr_ls";

  // sweep
  std::string sweep_param = "l_nlos";
  std::string grid;

  // locate
  std::filesystem::path sensor_file;
  std::filesystem::path range_log;
  std::filesystem::path reference_file;
  std::filesystem::path summary_path;

  // bench
  std::string l_grid = "10,100,1000";
  int fixes = 200;

  std::filesystem::path out;
  std::string format = "csv";
};

/// Parses "a:b" (unit step), "a:b:step", a comma list, or a single value.
std::vector<double> parse_grid(const std::string& spec);

std::vector<Estimator> parse_estimator_list(const std::string& spec);

struct BenchRow {
  int sensors = 0;
  int fixes = 0;
  double mean_fix_time = 0.0;  ///< s
  double mean_iterations = 0.0;
  double rmse = 0.0;  ///< m
};

/// Mean SR-MCC per-fix time for each sensor count, on seeded trials drawn
/// from `base` with L replaced.
std::vector<BenchRow> run_bench(const ScenarioParams& base, const std::vector<int>& sensor_counts, int fixes,
                                const SrMccOptions& opts);

std::string format_bench(const std::vector<BenchRow>& rows);

// Each command writes its table to cfg.out, to $TOALOC_OUTPUT_DIR, or to
// `out` (in that order of preference); progress and summaries go to `log`.
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_locate(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// Parses argv (argv[0] is the program name), dispatches, and maps
/// exceptions to exit codes. Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toaloc
