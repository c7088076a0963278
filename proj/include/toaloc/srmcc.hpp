#pragma once

// Maximum correntropy localization on squared-range residuals.
//
// The estimator maximizes sum_i exp(-e_i(x)^2 / (2 sigma^2)) with
// e_i(x) = r_i^2 - ||x - x_i||^2 by half-quadratic alternating maximization:
// a closed-form auxiliary step p_i = -exp(-e_i^2 / (2 sigma^2)) followed by a
// weighted squared-range GTRS with w_i = sqrt(-p_i), and a Silverman-rule
// kernel update on the new residuals.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "toaloc/gtrs.hpp"

namespace toaloc {

/// Correntropy kernel size in m^2 (it scales squared-range residuals).
/// The unbounded value stands for sigma = infinity: every kernel term is 1.
class KernelSize {
 public:
  explicit KernelSize(double value);
  static KernelSize unbounded() { return KernelSize(); }

  bool is_unbounded() const { return unbounded_; }
  /// Only meaningful when bounded.
  double value() const { return value_; }

 private:
  KernelSize() = default;
  double value_ = 0.0;
  bool unbounded_ = true;
};

struct SrMccOptions {
  int n_max = 10;
  double gamma = 1e-5;  ///< stop when ||x_(k+1) - x_(k)|| < gamma (m)
  int k_bisect = 30;
  /// |psi| stopping threshold for each x-step; negative selects the GTRS default.
  double psi_tolerance = -1.0;
  /// Empty selects the adaptive Silverman kernel; a value pins sigma.
  std::optional<double> fixed_sigma;
  double sigma_floor = 1e-3;  ///< m^2
  double weight_floor = kWeightFloor;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct LocalizationResult {
  Eigen::VectorXd x_hat;
  int iterations = 0;
  bool converged = false;  ///< gamma criterion met before the iteration cap
  KernelSize final_sigma = KernelSize::unbounded();
  /// Augmented cost after each pass. In fixed-sigma mode every entry is
  /// evaluated at the fixed sigma; otherwise at the sigma used by that pass.
  std::vector<double> objective_trace;
  Eigen::VectorXd auxiliary;  ///< p from the last pass
  std::vector<Eigen::VectorXd> iterates;  ///< x_(1), x_(2), ...
  /// L == d+1: solvable, but no redundancy to down-weight an outlier.
  bool minimal_geometry = false;
};

/// Squared-range residuals r_i^2 - ||x - x_i||^2.
Eigen::VectorXd squared_range_residuals(const Eigen::VectorXd& x, const Eigen::MatrixXd& sensors,
                                        const Eigen::VectorXd& ranges);

/// p_i = -exp(-e_i^2 / (2 sigma^2)), kept strictly below zero.
Eigen::VectorXd update_auxiliary(const Eigen::VectorXd& x, const Eigen::MatrixXd& sensors,
                                 const Eigen::VectorXd& ranges, KernelSize sigma);

/// 1.06 * min(sigma_e, iqr / 1.34) * count^(-1/5), without flooring.
double silverman_rule(double sigma_e, double iqr, int count);

/// Silverman bandwidth of the residuals (sample standard deviation with
/// 1/(L-1), linearly interpolated quartiles), floored at `sigma_floor`.
double silverman_kernel(const Eigen::VectorXd& residuals, double sigma_floor);

/// sum_i exp(-e_i^2 / (2 sigma^2)).
double correntropy_objective(const Eigen::VectorXd& x, const Eigen::MatrixXd& sensors,
                             const Eigen::VectorXd& ranges, KernelSize sigma);

/// Convex conjugate of the Gaussian kernel on [-1, 0): -p ln(-p) + p.
double gaussian_conjugate(double p);

/// sum_i [p_i e_i^2 / (2 sigma^2) - conjugate(p_i)]. Equals the correntropy
/// objective when p_i = -kernel(e_i), and is below it otherwise.
double augmented_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Eigen::MatrixXd& sensors,
                      const Eigen::VectorXd& ranges, KernelSize sigma);

/// Half-quadratic correntropy estimator starting from x = 0, sigma = inf.
LocalizationResult sr_mcc_localize(const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges,
                                   const SrMccOptions& opts = {});

/// Unit-weight squared-range least squares baseline (one GTRS solve).
LocalizationResult sr_ls_localize(const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges,
                                  int k_bisect = 30);

}  // namespace toaloc
