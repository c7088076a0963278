#include "toaloc/gtrs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "toaloc/errors.hpp"

namespace toaloc {
namespace {

// Reciprocal condition below which a "positive definite" normal matrix is
// treated as singular (collinear or coincident sensors).
constexpr double kMinRcond = 1e-15;

// Relative offset of the lower bracket from the open end of I.
constexpr double kLowerBracketOffset = 1e-9;
constexpr int kMaxUpperDoublings = 60;
constexpr double kBracketWidthTol = 1e-12;

// A'W'WA and A'W'Wb, formed once per solve so each bisection step is O(d^3).
struct NormalEquations {
  Eigen::MatrixXd AtWA;
  Eigen::VectorXd AtWb;
};

NormalEquations form_normal_equations(const SrSystem& sys, const Eigen::VectorXd& w) {
  if (w.size() != sys.count()) {
    throw ConfigError("weight vector has " + std::to_string(w.size()) + " entries, expected " +
                      std::to_string(sys.count()));
  }
  const Eigen::VectorXd w2 = w.array().square();
  NormalEquations ne;
  ne.AtWA = sys.A.transpose() * w2.asDiagonal() * sys.A;
  ne.AtWb = sys.A.transpose() * (w2.array() * sys.b_vec.array()).matrix();
  return ne;
}

Eigen::VectorXd solve_stationary(const SrSystem& sys, const NormalEquations& ne, double chi) {
  const Eigen::MatrixXd M = ne.AtWA + chi * sys.D;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("A'W'WA + chi*D is not positive definite at chi = " + std::to_string(chi));
  }
  return llt.solve(ne.AtWb - chi * sys.f);
}

double constraint_residual(const SrSystem& sys, const Eigen::VectorXd& y) {
  return y.dot(sys.D * y) + 2.0 * sys.f.dot(y);
}

}  // namespace

WeightVector WeightVector::from_auxiliary(const Eigen::VectorXd& p) {
  return {(-p.array()).max(0.0).sqrt().matrix()};
}

WeightVector WeightVector::floored(double floor) const {
  return {w.array().max(floor).matrix()};
}

SrSystem assemble_sr_system(const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges) {
  const Eigen::Index count = sensors.rows();
  const Eigen::Index dim = sensors.cols();
  if (dim < 1) {
    throw ConfigError("sensor positions have no coordinates");
  }
  if (ranges.size() != count) {
    throw ConfigError("got " + std::to_string(ranges.size()) + " ranges for " + std::to_string(count) +
                      " sensors");
  }
  if (count < dim + 1) {
    throw ConfigError("need at least d+1 = " + std::to_string(dim + 1) + " sensors, got " +
                      std::to_string(count));
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!std::isfinite(ranges(i)) || ranges(i) < 0.0) {
      throw ConfigError("range " + std::to_string(i) + " is negative or not finite");
    }
  }

  SrSystem sys;
  sys.A.resize(count, dim + 1);
  sys.A.leftCols(dim) = -2.0 * sensors;
  sys.A.col(dim).setOnes();
  sys.b_vec = ranges.array().square() - sensors.rowwise().squaredNorm().array();
  sys.D = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
  sys.D.topLeftCorner(dim, dim).setIdentity();
  sys.f = Eigen::VectorXd::Zero(dim + 1);
  sys.f(dim) = -0.5;
  return sys;
}

double max_generalized_eigenvalue(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
  if (U.rows() != U.cols() || V.rows() != V.cols() || U.rows() != V.rows()) {
    throw ConfigError("generalized eigenproblem needs square matrices of equal size");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(V);
  if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
    throw NumericalError("matrix is not positive definite (degenerate weighting or sensor geometry)");
  }
  // With V = L L', the pencil (U, V) shares its spectrum with L^-1 U L^-T.
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd left = L.triangularView<Eigen::Lower>().solve(U);
  const Eigen::MatrixXd C = L.triangularView<Eigen::Lower>().solve(left.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::VectorXd y_hat(const SrSystem& sys, const WeightVector& w, double chi) {
  return solve_stationary(sys, form_normal_equations(sys, w.w), chi);
}

double psi(const SrSystem& sys, const WeightVector& w, double chi) {
  return constraint_residual(sys, y_hat(sys, w, chi));
}

double default_psi_tolerance(const SrSystem& sys) {
  return 1e-10 * std::max(1.0, sys.b_vec.squaredNorm());
}

GtrsSolution solve_gtrs(const SrSystem& sys, const WeightVector& w, const GtrsOptions& opts) {
  const Eigen::VectorXd weights = w.floored(opts.weight_floor).w;
  const NormalEquations ne = form_normal_equations(sys, weights);
  const double tol = opts.psi_tolerance >= 0.0 ? opts.psi_tolerance : default_psi_tolerance(sys);

  const double lambda = max_generalized_eigenvalue(sys.D, ne.AtWA);
  if (!(lambda > 0.0)) {
    throw NumericalError("largest generalized eigenvalue of (D, A'W'WA) is not positive");
  }
  const double inv = 1.0 / lambda;
  const double chi_lo0 = -inv + kLowerBracketOffset * (1.0 + std::abs(inv));

  auto evaluate = [&](double chi, Eigen::VectorXd& y) {
    y = solve_stationary(sys, ne, chi);
    return constraint_residual(sys, y);
  };

  GtrsSolution sol;
  Eigen::VectorXd y;
  double lo = chi_lo0;
  const double psi_lo = evaluate(lo, y);
  sol.chi_lower = lo;
  if (psi_lo <= tol) {
    // Root sits in the sliver (-1/lambda, chi_lo] or exactly at chi_lo.
    sol.y = y;
    sol.chi = lo;
    sol.psi_residual = psi_lo;
    sol.chi_upper = lo;
    return sol;
  }

  double hi = std::max(1.0, std::abs(lo));
  double psi_hi = evaluate(hi, y);
  for (int k = 0; psi_hi >= 0.0; ++k) {
    if (std::abs(psi_hi) <= tol) {
      sol.y = y;
      sol.chi = hi;
      sol.psi_residual = psi_hi;
      sol.chi_upper = hi;
      return sol;
    }
    if (k == kMaxUpperDoublings) {
      throw NumericalError("no sign change of psi found while expanding the upper bracket");
    }
    lo = hi;
    hi *= 2.0;
    psi_hi = evaluate(hi, y);
  }
  sol.chi_upper = hi;

  double chi = 0.5 * (lo + hi);
  double value = evaluate(chi, y);
  int steps = 1;
  while (std::abs(value) > tol && steps < opts.max_steps &&
         hi - lo > kBracketWidthTol * (1.0 + std::abs(chi))) {
    if (value > 0.0) {
      lo = chi;
    } else {
      hi = chi;
    }
    chi = 0.5 * (lo + hi);
    value = evaluate(chi, y);
    ++steps;
  }

  sol.y = y;
  sol.chi = chi;
  sol.psi_residual = value;
  sol.bisection_steps = steps;
  return sol;
}

}  // namespace toaloc
