#pragma once

// Monte Carlo evaluation: RMSE, the LOS Gaussian-TOA CRLB, per-parameter
// trial blocks and sweeps.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "toaloc/scenario.hpp"
#include "toaloc/srmcc.hpp"

namespace toaloc {

enum class Estimator { kSrMcc, kSrLs };

std::string_view estimator_name(Estimator e);
/// Accepts "sr_mcc" / "sr_ls" (also with '-'). Throws ConfigError otherwise.
Estimator parse_estimator(std::string_view name);

enum class SweepParameter { kSigmaG2, kBMax, kLNlos };

std::string_view parameter_name(SweepParameter p);
/// Accepts "sigma_g2", "b", "l_nlos" and their dashed spellings.
SweepParameter parse_parameter(std::string_view name);

struct ResultRow {
  double param = 0.0;
  std::string estimator;
  double rmse = 0.0;                 ///< m
  std::optional<double> crlb_rmse;   ///< m; LOS configurations only
  double mean_fix_time = 0.0;        ///< s
  int trials = 0;
  int excluded = 0;

  bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
  std::string parameter;  ///< name of the varied parameter
  std::vector<ResultRow> rows;

  bool operator==(const ResultTable&) const = default;
};

struct RunOptions {
  std::vector<Estimator> estimators{Estimator::kSrMcc, Estimator::kSrLs};
  SrMccOptions srmcc;
  /// Report the CRLB even when some paths are NLOS (as a LOS reference).
  bool force_crlb = false;
  /// When false, mean_fix_time is reported as 0 so tables are reproducible.
  bool measure_time = true;
};

struct SweepConfig {
  ScenarioParams base;
  SweepParameter parameter = SweepParameter::kLNlos;
  std::vector<double> grid;
  int trials = 3000;
  RunOptions run;

  void validate() const;
};

/// Root mean squared Euclidean error. Throws std::invalid_argument for empty
/// or mismatched inputs.
double rmse(const std::vector<Eigen::VectorXd>& estimates, const std::vector<Eigen::VectorXd>& truths);

/// trace(F^-1) for one trial with F = (1/sigma_g2) sum u_i u_i'. Throws
/// NumericalError when F is singular.
double crlb_trace(const Scenario& sc, double sigma_g2);

struct CrlbSummary {
  double rmse = 0.0;  ///< sqrt(mean trace(F^-1)) over usable trials
  int used = 0;
  int excluded = 0;
};

/// Throws NumericalError when no trial has an invertible Fisher matrix.
CrlbSummary crlb_rmse(const std::vector<Scenario>& scenarios, double sigma_g2);

/// Runs `trials` seeded trials (seed = params.seed + t) with every estimator
/// on identical data. Trials where any estimator fails are dropped for all.
/// Each row's param field is 0; callers fill it.
std::vector<ResultRow> run_trials(const ScenarioParams& params, int trials, const RunOptions& run = {});

/// One run_trials block per grid value; grid point g uses base seed
/// base.seed + g * trials.
ResultTable run_sweep(const SweepConfig& cfg);

/// Copy of `base` with the swept parameter set to `value`.
ScenarioParams with_parameter(ScenarioParams base, SweepParameter p, double value);

}  // namespace toaloc
