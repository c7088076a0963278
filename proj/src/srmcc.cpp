#include "toaloc/srmcc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "toaloc/errors.hpp"

namespace toaloc {
namespace {

// Linearly interpolated quantile of sorted data, position q * (n - 1).
double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(pos));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lower);
  return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

// exp(-e^2 / (2 sigma^2))
double gaussian_kernel(double residual, KernelSize sigma) {
  if (sigma.is_unbounded()) {
    return 1.0;
  }
  const double s = sigma.value();
  return std::exp(-residual * residual / (2.0 * s * s));
}

}  // namespace

KernelSize::KernelSize(double value) : value_(value), unbounded_(false) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError("kernel size must be positive and finite, got " + std::to_string(value));
  }
}

void SrMccOptions::validate() const {
  if (n_max < 1) {
    throw ConfigError("n_max must be at least 1");
  }
  if (!(gamma > 0.0)) {
    throw ConfigError("gamma must be positive");
  }
  if (k_bisect < 1) {
    throw ConfigError("k_bisect must be at least 1");
  }
  if (fixed_sigma && !(*fixed_sigma > 0.0 && std::isfinite(*fixed_sigma))) {
    throw ConfigError("fixed sigma must be positive and finite");
  }
  if (!(sigma_floor > 0.0)) {
    throw ConfigError("sigma_floor must be positive");
  }
  if (!(weight_floor > 0.0 && weight_floor <= 1.0)) {
    throw ConfigError("weight_floor must lie in (0, 1]");
  }
}

Eigen::VectorXd squared_range_residuals(const Eigen::VectorXd& x, const Eigen::MatrixXd& sensors,
                                        const Eigen::VectorXd& ranges) {
  return ranges.array().square() - (sensors.rowwise() - x.transpose()).rowwise().squaredNorm().array();
}

Eigen::VectorXd update_auxiliary(const Eigen::VectorXd& x, const Eigen::MatrixXd& sensors,
                                 const Eigen::VectorXd& ranges, KernelSize sigma) {
  if (sigma.is_unbounded()) {
    return Eigen::VectorXd::Constant(ranges.size(), -1.0);
  }
  const Eigen::VectorXd e = squared_range_residuals(x, sensors, ranges);
  // exp() underflows to zero for gross outliers; p must stay in [-1, 0).
  constexpr double kTiny = std::numeric_limits<double>::min();
  return e.unaryExpr([&](double r) { return -std::max(gaussian_kernel(r, sigma), kTiny); });
}

double silverman_rule(double sigma_e, double iqr, int count) {
  return 1.06 * std::min(sigma_e, iqr / 1.34) * std::pow(static_cast<double>(count), -0.2);
}

double silverman_kernel(const Eigen::VectorXd& residuals, double sigma_floor) {
  const Eigen::Index n = residuals.size();
  if (n < 2) {
    throw ConfigError("Silverman kernel needs at least two residuals");
  }
  const double mean = residuals.mean();
  const double sigma_e = std::sqrt((residuals.array() - mean).square().sum() / static_cast<double>(n - 1));

  std::vector<double> sorted(residuals.data(), residuals.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);

  return std::max(silverman_rule(sigma_e, iqr, static_cast<int>(n)), sigma_floor);
}

double correntropy_objective(const Eigen::VectorXd& x, const Eigen::MatrixXd& sensors,
                             const Eigen::VectorXd& ranges, KernelSize sigma) {
  const Eigen::VectorXd e = squared_range_residuals(x, sensors, ranges);
  double total = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    total += gaussian_kernel(e(i), sigma);
  }
  return total;
}

double gaussian_conjugate(double p) {
  if (p >= 0.0) {
    return 0.0;  // limit at 0-
  }
  return -p * std::log(-p) + p;
}

double augmented_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Eigen::MatrixXd& sensors,
                      const Eigen::VectorXd& ranges, KernelSize sigma) {
  const Eigen::VectorXd e = squared_range_residuals(x, sensors, ranges);
  double total = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    double quad = 0.0;
    if (!sigma.is_unbounded()) {
      const double s = sigma.value();
      quad = p(i) * e(i) * e(i) / (2.0 * s * s);
    }
    total += quad - gaussian_conjugate(p(i));
  }
  return total;
}

LocalizationResult sr_mcc_localize(const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges,
                                   const SrMccOptions& opts) {
  opts.validate();
  const SrSystem sys = assemble_sr_system(sensors, ranges);
  GtrsOptions gopts;
  gopts.max_steps = opts.k_bisect;
  gopts.psi_tolerance = opts.psi_tolerance;
  gopts.weight_floor = opts.weight_floor;

  LocalizationResult result;
  result.minimal_geometry = sys.count() == sys.dim() + 1;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.dim());
  KernelSize sigma = KernelSize::unbounded();
  for (int k = 0; k < opts.n_max; ++k) {
    // p-step, x-step, sigma-step.
    const Eigen::VectorXd p = update_auxiliary(x, sensors, ranges, sigma);
    const GtrsSolution sol = solve_gtrs(sys, WeightVector::from_auxiliary(p), gopts);
    const Eigen::VectorXd x_next = sol.position();

    const KernelSize next_sigma =
        opts.fixed_sigma ? KernelSize(*opts.fixed_sigma)
                         : KernelSize(silverman_kernel(squared_range_residuals(x_next, sensors, ranges),
                                                       opts.sigma_floor));
    const KernelSize eval_sigma = opts.fixed_sigma ? KernelSize(*opts.fixed_sigma) : sigma;
    result.objective_trace.push_back(augmented_cost(x_next, p, sensors, ranges, eval_sigma));

    const double step = (x_next - x).norm();
    x = x_next;
    result.iterates.push_back(x);
    sigma = next_sigma;
    result.auxiliary = p;
    result.iterations = k + 1;
    if (step < opts.gamma) {
      result.converged = true;
      break;
    }
  }
  result.x_hat = x;
  result.final_sigma = sigma;
  return result;
}

LocalizationResult sr_ls_localize(const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges, int k_bisect) {
  if (k_bisect < 1) {
    throw ConfigError("k_bisect must be at least 1");
  }
  const SrSystem sys = assemble_sr_system(sensors, ranges);
  GtrsOptions gopts;
  gopts.max_steps = k_bisect;
  const GtrsSolution sol = solve_gtrs(sys, WeightVector::unit(sys.count()), gopts);

  LocalizationResult result;
  result.x_hat = sol.position();
  result.iterates.push_back(result.x_hat);
  result.iterations = 1;
  result.converged = true;
  result.auxiliary = Eigen::VectorXd::Constant(sys.count(), -1.0);
  result.minimal_geometry = sys.count() == sys.dim() + 1;
  return result;
}

}  // namespace toaloc
