#include "toaloc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "toaloc/errors.hpp"

namespace toaloc {
namespace {

constexpr double kFisherMinRcond = 1e-12;

std::string normalized(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

LocalizationResult run_estimator(Estimator e, const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges,
                                 const SrMccOptions& opts) {
  switch (e) {
    case Estimator::kSrMcc:
      return sr_mcc_localize(sensors, ranges, opts);
    case Estimator::kSrLs:
      return sr_ls_localize(sensors, ranges, opts.k_bisect);
  }
  throw std::logic_error("unknown estimator");
}

}  // namespace

std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kSrMcc:
      return "sr_mcc";
    case Estimator::kSrLs:
      return "sr_ls";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  const std::string s = normalized(name);
  if (s == "sr_mcc") return Estimator::kSrMcc;
  if (s == "sr_ls") return Estimator::kSrLs;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::string_view parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kSigmaG2:
      return "sigma_g2";
    case SweepParameter::kBMax:
      return "b";
    case SweepParameter::kLNlos:
      return "l_nlos";
  }
  return "unknown";
}

SweepParameter parse_parameter(std::string_view name) {
  const std::string s = normalized(name);
  if (s == "sigma_g2") return SweepParameter::kSigmaG2;
  if (s == "b" || s == "b_max") return SweepParameter::kBMax;
  if (s == "l_nlos") return SweepParameter::kLNlos;
  throw ConfigError("unknown sweep parameter '" + std::string(name) + "'");
}

ScenarioParams with_parameter(ScenarioParams base, SweepParameter p, double value) {
  switch (p) {
    case SweepParameter::kSigmaG2:
      base.sigma_g2 = value;
      break;
    case SweepParameter::kBMax:
      base.b_max = value;
      break;
    case SweepParameter::kLNlos:
      if (value != std::floor(value)) {
        throw ConfigError("l_nlos grid values must be integers");
      }
      base.l_nlos = static_cast<int>(value);
      break;
  }
  return base;
}

void SweepConfig::validate() const {
  if (trials < 1) {
    throw ConfigError("trials must be at least 1");
  }
  if (grid.empty()) {
    throw ConfigError("sweep grid is empty");
  }
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ConfigError("sweep grid must be sorted ascending");
  }
  if (run.estimators.empty()) {
    throw ConfigError("no estimators selected");
  }
  for (double v : grid) {
    with_parameter(base, parameter, v).validate();
  }
}

double rmse(const std::vector<Eigen::VectorXd>& estimates, const std::vector<Eigen::VectorXd>& truths) {
  if (estimates.empty() || estimates.size() != truths.size()) {
    throw std::invalid_argument("rmse needs equal-length, nonempty estimate and truth lists");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    total += (estimates[j] - truths[j]).squaredNorm();
  }
  return std::sqrt(total / static_cast<double>(estimates.size()));
}

double crlb_trace(const Scenario& sc, double sigma_g2) {
  const Eigen::Index dim = sc.source.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < sc.sensors.rows(); ++i) {
    const Eigen::VectorXd diff = sc.source - sc.sensors.row(i).transpose();
    const double dist = diff.norm();
    if (dist == 0.0) {
      throw NumericalError("source coincides with a sensor; Fisher information undefined");
    }
    const Eigen::VectorXd u = diff / dist;
    G += u * u.transpose();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success || llt.rcond() < kFisherMinRcond) {
    throw NumericalError("singular Fisher information (collinear geometry)");
  }
  const Eigen::MatrixXd G_inv = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  return sigma_g2 * G_inv.trace();
}

CrlbSummary crlb_rmse(const std::vector<Scenario>& scenarios, double sigma_g2) {
  CrlbSummary out;
  double total = 0.0;
  for (const Scenario& sc : scenarios) {
    try {
      total += crlb_trace(sc, sigma_g2);
      ++out.used;
    } catch (const NumericalError&) {
      ++out.excluded;
    }
  }
  if (out.used == 0) {
    throw NumericalError("no trial has an invertible Fisher matrix");
  }
  out.rmse = std::sqrt(total / out.used);
  return out;
}

std::vector<ResultRow> run_trials(const ScenarioParams& params, int trials, const RunOptions& run) {
  params.validate();
  run.srmcc.validate();
  if (trials < 1) {
    throw ConfigError("trials must be at least 1");
  }
  if (run.estimators.empty()) {
    throw ConfigError("no estimators selected");
  }

  const std::size_t n_est = run.estimators.size();
  std::vector<std::vector<Eigen::VectorXd>> estimates(n_est);
  std::vector<double> elapsed(n_est, 0.0);
  std::vector<Eigen::VectorXd> truths;
  std::vector<Scenario> used_scenarios;
  int excluded = 0;

  std::vector<Eigen::VectorXd> trial_estimates(n_est);
  std::vector<double> trial_times(n_est);
  for (int t = 0; t < trials; ++t) {
    ScenarioParams trial = params;
    trial.seed = params.seed + static_cast<std::uint64_t>(t);
    const Scenario sc = sample_scenario(trial);
    const RangeSet rs = synthesize_ranges(sc, trial);

    bool failed = false;
    for (std::size_t e = 0; e < n_est && !failed; ++e) {
      const auto start = std::chrono::steady_clock::now();
      try {
        trial_estimates[e] = run_estimator(run.estimators[e], sc.sensors, rs.ranges, run.srmcc).x_hat;
      } catch (const NumericalError&) {
        failed = true;
      }
      const auto stop = std::chrono::steady_clock::now();
      trial_times[e] = std::chrono::duration<double>(stop - start).count();
    }
    if (failed) {
      ++excluded;
      continue;
    }
    for (std::size_t e = 0; e < n_est; ++e) {
      estimates[e].push_back(trial_estimates[e]);
      elapsed[e] += trial_times[e];
    }
    truths.push_back(sc.source);
    used_scenarios.push_back(sc);
  }
  if (truths.empty()) {
    throw NumericalError("every trial failed");
  }

  std::optional<double> crlb;
  if (params.l_nlos == 0 || run.force_crlb) {
    try {
      crlb = crlb_rmse(used_scenarios, params.sigma_g2).rmse;
    } catch (const NumericalError&) {
      crlb.reset();
    }
  }

  std::vector<ResultRow> rows;
  for (std::size_t e = 0; e < n_est; ++e) {
    ResultRow row;
    row.estimator = std::string(estimator_name(run.estimators[e]));
    row.rmse = rmse(estimates[e], truths);
    row.crlb_rmse = crlb;
    row.mean_fix_time = run.measure_time ? elapsed[e] / static_cast<double>(truths.size()) : 0.0;
    row.trials = trials;
    row.excluded = excluded;
    rows.push_back(std::move(row));
  }
  return rows;
}

ResultTable run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  ResultTable table;
  table.parameter = std::string(parameter_name(cfg.parameter));
  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    ScenarioParams params = with_parameter(cfg.base, cfg.parameter, cfg.grid[g]);
    params.seed = cfg.base.seed + static_cast<std::uint64_t>(g) * static_cast<std::uint64_t>(cfg.trials);
    for (ResultRow& row : run_trials(params, cfg.trials, cfg.run)) {
      row.param = cfg.grid[g];
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace toaloc
