#pragma once

// Exact solver for the generalized trust region subproblem (GTRS) produced by
// weighted squared-range least squares:
//
//   min_y ||W (A y - b)||^2   s.t.   y' D y + 2 f' y = 0,   y = [x; alpha]
//
// where row i of A is [-2 x_i', 1], b_i = r_i^2 - ||x_i||^2, D = diag(1,..,1,0)
// and f = (0,..,0,-1/2). The constraint pins alpha = ||x||^2. The optimum is
// y(chi) = (A'W'WA + chi D)^-1 (A'W'Wb - chi f) at the root of the strictly
// decreasing psi(chi) = y(chi)' D y(chi) + 2 f' y(chi) on
// I = (-1/lambda_max(D, A'W'WA), inf), located by bisection.

#include <Eigen/Dense>

namespace toaloc {

/// Squared-range system assembled from L sensors in d dimensions.
struct SrSystem {
  Eigen::MatrixXd A;      ///< L x (d+1)
  Eigen::VectorXd b_vec;  ///< L, units m^2
  Eigen::MatrixXd D;      ///< (d+1) x (d+1)
  Eigen::VectorXd f;      ///< d+1

  int dim() const { return static_cast<int>(A.cols()) - 1; }
  int count() const { return static_cast<int>(A.rows()); }
};

/// Nonnegative per-measurement weights w_i (W = diag(w)).
struct WeightVector {
  Eigen::VectorXd w;

  static WeightVector unit(int count) { return {Eigen::VectorXd::Ones(count)}; }

  /// Weights derived from auxiliary variables p_i in [-1, 0): w_i = sqrt(-p_i).
  static WeightVector from_auxiliary(const Eigen::VectorXd& p);

  /// Copy with every entry raised to at least `floor`.
  WeightVector floored(double floor) const;
};

/// Smallest admissible weight. Keeps A'W'WA positive definite when the
/// auxiliary variables of far outliers underflow.
inline constexpr double kWeightFloor = 1e-6;

struct GtrsSolution {
  Eigen::VectorXd y;  ///< [x_hat; alpha_hat]
  double chi = 0.0;
  double psi_residual = 0.0;
  int bisection_steps = 0;
  double chi_lower = 0.0;  ///< initial bracket, lower end
  double chi_upper = 0.0;  ///< initial bracket, upper end

  Eigen::VectorXd position() const { return y.head(y.size() - 1); }
  double alpha() const { return y(y.size() - 1); }
};

struct GtrsOptions {
  int max_steps = 30;
  /// Absolute |psi| stopping threshold; a negative value selects the
  /// default 1e-10 * max(1, ||b_vec||^2).
  double psi_tolerance = -1.0;
  double weight_floor = kWeightFloor;
};

/// Builds (A, b_vec, D, f). `sensors` holds one sensor per row (L x d).
/// Throws ConfigError on dimension mismatch, L < d+1, or invalid ranges.
SrSystem assemble_sr_system(const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges);

/// Largest eigenvalue of V^{-1/2} U V^{-1/2}. Throws NumericalError when V is
/// not (numerically) positive definite.
double max_generalized_eigenvalue(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

/// y(chi). Throws NumericalError if A'W'WA + chi D is not positive definite,
/// i.e. chi is at or left of the admissible interval.
Eigen::VectorXd y_hat(const SrSystem& sys, const WeightVector& w, double chi);

/// psi(chi) = y' D y + 2 f' y evaluated at y_hat(chi).
double psi(const SrSystem& sys, const WeightVector& w, double chi);

/// Default |psi| tolerance for a system: 1e-10 * max(1, ||b_vec||^2).
double default_psi_tolerance(const SrSystem& sys);

/// Solves the GTRS exactly up to the bisection budget. Weights are floored at
/// `opts.weight_floor` first. Throws NumericalError for degenerate geometry
/// or when no upper bracket is found.
GtrsSolution solve_gtrs(const SrSystem& sys, const WeightVector& w, const GtrsOptions& opts = {});

}  // namespace toaloc
