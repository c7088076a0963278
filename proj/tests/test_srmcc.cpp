#include "toaloc/srmcc.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toaloc/errors.hpp"
#include "toaloc/scenario.hpp"

using namespace toaloc;

namespace {

Eigen::VectorXd exact_ranges(const Eigen::MatrixXd& sensors, const Eigen::VectorXd& source) {
  return (sensors.rowwise() - source.transpose()).rowwise().norm();
}

// Six sensors on a circle of radius 9 around (10, 10).
Eigen::MatrixXd hexagon() {
  Eigen::MatrixXd s(6, 2);
  for (int i = 0; i < 6; ++i) {
    const double a = 2.0 * M_PI * i / 6.0 + 0.3;
    s(i, 0) = 10.0 + 9.0 * std::cos(a);
    s(i, 1) = 10.0 + 9.0 * std::sin(a);
  }
  return s;
}

double kernel_sum_by_loop(const Eigen::VectorXd& x, const Eigen::MatrixXd& sensors, const Eigen::VectorXd& ranges,
                          double sigma) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < sensors.rows(); ++i) {
    double d2 = 0.0;
    for (Eigen::Index j = 0; j < sensors.cols(); ++j) {
      d2 += (x(j) - sensors(i, j)) * (x(j) - sensors(i, j));
    }
    const double e = ranges(i) * ranges(i) - d2;
    total += std::exp(-e * e / (2.0 * sigma * sigma));
  }
  return total;
}

ScenarioParams nlos_params(std::uint64_t seed) {
  ScenarioParams p;
  p.sigma_g2 = 0.1;
  p.b_max = 5.0;
  p.l_nlos = 2;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(UpdateAuxiliary, HandValues) {
  Eigen::MatrixXd sensors(3, 2);
  sensors << 0, 0, 3, 0, 0, 4;
  const Eigen::Vector2d x(0, 0);
  const double sigma = 2.0;
  // residual_i = r_i^2 - ||x - x_i||^2
  Eigen::Vector3d ranges;
  ranges(0) = 0.0;                                          // residual 0
  ranges(1) = std::sqrt(9.0 + std::sqrt(2.0) * sigma);      // residual^2 = 2 sigma^2
  ranges(2) = std::sqrt(16.0 + 1.0);                        // residual 1
  const Eigen::VectorXd p = update_auxiliary(x, sensors, ranges, KernelSize(sigma));
  EXPECT_NEAR(p(0), -1.0, 1e-15);
  EXPECT_NEAR(p(1), -std::exp(-1.0), 1e-9);
  EXPECT_NEAR(p(1), -0.367879, 1e-6);
  EXPECT_NEAR(p(2), -std::exp(-1.0 / 8.0), 1e-12);
}

TEST(UpdateAuxiliary, UnboundedKernelGivesMinusOne) {
  std::mt19937_64 gen(1);
  const auto inst = oracle::random_instance(gen, 7, 20.0, 1.0);
  const Eigen::VectorXd p =
      update_auxiliary(Eigen::Vector2d(3, 4), inst.sensors, inst.ranges, KernelSize::unbounded());
  EXPECT_EQ(p, Eigen::VectorXd::Constant(7, -1.0));
}

TEST(UpdateAuxiliary, StaysInsideHalfOpenInterval) {
  std::mt19937_64 gen(2);
  const auto inst = oracle::random_instance(gen, 8, 20.0, 0.1);
  for (double sigma : {1e-6, 1e-3, 1.0, 1e6}) {
    const Eigen::VectorXd p = update_auxiliary(Eigen::Vector2d(-50, 80), inst.sensors, inst.ranges, KernelSize(sigma));
    EXPECT_TRUE((p.array() >= -1.0).all());
    EXPECT_TRUE((p.array() < 0.0).all());
  }
}

TEST(KernelSize, RejectsNonPositive) {
  EXPECT_THROW(KernelSize(0.0), ConfigError);
  EXPECT_THROW(KernelSize(-1.0), ConfigError);
  EXPECT_THROW(KernelSize{std::numeric_limits<double>::infinity()}, ConfigError);
  EXPECT_TRUE(KernelSize::unbounded().is_unbounded());
}

TEST(Silverman, RuleHandValues) {
  // 1.06 * 10^(-1/5)
  EXPECT_NEAR(silverman_rule(1.0, 1.34, 10), 0.668815, 1e-6);
  EXPECT_NEAR(silverman_rule(1.0, 1.34, 10), 1.06 * std::pow(10.0, -0.2), 1e-15);
  EXPECT_NEAR(silverman_rule(2.0, 1.34, 10), 1.06 * std::pow(10.0, -0.2), 1e-15);
  EXPECT_NEAR(silverman_rule(0.5, 1.34, 10), 0.5 * 1.06 * std::pow(10.0, -0.2), 1e-15);
}

TEST(Silverman, IdenticalResidualsHitFloor) {
  EXPECT_DOUBLE_EQ(silverman_kernel(Eigen::VectorXd::Constant(10, 3.5), 1e-3), 1e-3);
}

TEST(Silverman, SampleStatisticsOfSequence) {
  // 1..10: sample std = sqrt(82.5/9), quartiles 3.25 and 7.75 (IQR 4.5).
  Eigen::VectorXd r(10);
  for (int i = 0; i < 10; ++i) r(i) = 10 - i;
  const double sigma_e = std::sqrt(82.5 / 9.0);
  ASSERT_LT(sigma_e, 4.5 / 1.34);
  EXPECT_NEAR(silverman_kernel(r, 1e-3), 1.06 * sigma_e * std::pow(10.0, -0.2), 1e-12);
}

TEST(Silverman, IqrBranch) {
  // One gross value inflates the standard deviation; the IQR stays put.
  Eigen::VectorXd r(5);
  r << 0.0, 1.0, 2.0, 3.0, 1000.0;
  // quartiles at positions 1 and 3 -> 1 and 3
  EXPECT_NEAR(silverman_kernel(r, 1e-3), 1.06 * (2.0 / 1.34) * std::pow(5.0, -0.2), 1e-12);
}

TEST(CorrentropyObjective, NoiselessTruthScoresL) {
  std::mt19937_64 gen(3);
  const auto inst = oracle::random_instance(gen, 9, 20.0, 0.0);
  EXPECT_NEAR(correntropy_objective(inst.source, inst.sensors, inst.ranges, KernelSize(0.5)), 9.0, 1e-9);
}

TEST(CorrentropyObjective, HugeKernelFlattens) {
  std::mt19937_64 gen(4);
  const auto inst = oracle::random_instance(gen, 9, 20.0, 1.0);
  EXPECT_NEAR(correntropy_objective(Eigen::Vector2d(-7, 3), inst.sensors, inst.ranges, KernelSize(1e9)), 9.0, 1e-6);
}

TEST(CorrentropyObjective, MatchesLoopOracle) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-5.0, 25.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(gen, 6, 20.0, 0.5);
    const Eigen::Vector2d x(u(gen), u(gen));
    const double sigma = 0.5 + trial;
    EXPECT_NEAR(correntropy_objective(x, inst.sensors, inst.ranges, KernelSize(sigma)),
                kernel_sum_by_loop(x, inst.sensors, inst.ranges, sigma), 1e-12);
  }
}

TEST(AugmentedCost, ConjugateAtMinusOne) {
  EXPECT_DOUBLE_EQ(gaussian_conjugate(-1.0), -1.0);
  EXPECT_NEAR(gaussian_conjugate(-1e-300), 0.0, 1e-290);
}

TEST(AugmentedCost, TightAtKernelMaximizerAndBelowElsewhere) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> pu(-1.0, -1e-6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(gen, 7, 20.0, 0.5);
    const Eigen::Vector2d x = inst.source + Eigen::Vector2d(0.3, -0.2);
    const KernelSize sigma(1.0 + 0.2 * trial);
    const Eigen::VectorXd p_star = update_auxiliary(x, inst.sensors, inst.ranges, sigma);
    const double objective = correntropy_objective(x, inst.sensors, inst.ranges, sigma);
    EXPECT_NEAR(augmented_cost(x, p_star, inst.sensors, inst.ranges, sigma), objective, 1e-12);

    Eigen::VectorXd p(7);
    for (int i = 0; i < 7; ++i) p(i) = pu(gen);
    EXPECT_LE(augmented_cost(x, p, inst.sensors, inst.ranges, sigma), objective + 1e-12);
  }
}

TEST(AugmentedCost, ZeroResidualsAndUnitAuxiliary) {
  std::mt19937_64 gen(7);
  const auto inst = oracle::random_instance(gen, 5, 20.0, 0.0);
  EXPECT_NEAR(augmented_cost(inst.source, Eigen::VectorXd::Constant(5, -1.0), inst.sensors, inst.ranges,
                             KernelSize(2.0)),
              5.0, 1e-9);
}

TEST(SrMccOptions, DefaultsAndValidation) {
  const SrMccOptions o;
  EXPECT_EQ(o.n_max, 10);
  EXPECT_DOUBLE_EQ(o.gamma, 1e-5);
  EXPECT_EQ(o.k_bisect, 30);
  EXPECT_FALSE(o.fixed_sigma.has_value());
  EXPECT_NO_THROW(o.validate());

  SrMccOptions bad = o;
  bad.n_max = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = o;
  bad.gamma = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = o;
  bad.fixed_sigma = -2.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SrMccLocalize, NoiselessExactRecovery) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(gen, 10, 20.0, 0.0);
    const LocalizationResult r = sr_mcc_localize(inst.sensors, inst.ranges);
    EXPECT_LT((r.x_hat - inst.source).norm(), 1e-6);
    EXPECT_LE(r.iterations, 10);
  }
}

TEST(SrMccLocalize, OutlierRejectedNearCorrentropyMaximizer) {
  const Eigen::MatrixXd sensors = hexagon();
  const Eigen::Vector2d source(7.0, 12.0);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> noise(0.0, 0.1);  // sigma_G^2 = 0.01
  Eigen::VectorXd ranges = exact_ranges(sensors, source);
  for (Eigen::Index i = 0; i < ranges.size(); ++i) ranges(i) += noise(gen);
  ranges(2) += 10.0;

  const LocalizationResult mcc = sr_mcc_localize(sensors, ranges);
  const LocalizationResult ls = sr_ls_localize(sensors, ranges);
  EXPECT_LT((mcc.x_hat - source).norm(), (ls.x_hat - source).norm());

  ASSERT_FALSE(mcc.final_sigma.is_unbounded());
  const double sigma = mcc.final_sigma.value();
  const auto grid = oracle::grid_minimize(0.0, 20.0, 0.01, [&](double x, double y) {
    return -kernel_sum_by_loop(Eigen::Vector2d(x, y), sensors, ranges, sigma);
  });
  EXPECT_LT((mcc.x_hat - grid.best_point).norm(), 0.05);
}

TEST(SrMccLocalize, SingleIterationEqualsSquaredRangeLeastSquares) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ScenarioParams p = nlos_params(seed);
    const Scenario sc = sample_scenario(p);
    const RangeSet rs = synthesize_ranges(sc, p);
    SrMccOptions o;
    o.n_max = 1;
    const LocalizationResult mcc = sr_mcc_localize(sc.sensors, rs.ranges, o);
    const LocalizationResult ls = sr_ls_localize(sc.sensors, rs.ranges);
    EXPECT_EQ(mcc.x_hat, ls.x_hat);
    EXPECT_EQ(mcc.iterations, 1);

    const LocalizationResult full = sr_mcc_localize(sc.sensors, rs.ranges);
    EXPECT_EQ(full.iterates.front(), ls.x_hat);
  }
}

TEST(SrMccLocalize, TranslationEquivariantOnExactRanges) {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = oracle::random_instance(gen, 8, 20.0, 0.0);
    const Eigen::Vector2d shift(123.0, -47.5);
    const Eigen::MatrixXd moved = inst.sensors.rowwise() + shift.transpose();
    const Eigen::Vector2d moved_source = inst.source + shift;
    const LocalizationResult a = sr_mcc_localize(inst.sensors, inst.ranges);
    const LocalizationResult b = sr_mcc_localize(moved, exact_ranges(moved, moved_source));
    EXPECT_LT(((b.x_hat - shift) - a.x_hat).norm(), 1e-6);
  }
}

TEST(SrMccLocalize, AuxiliaryRangeAndIterationCap) {
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const ScenarioParams p = nlos_params(seed);
    const Scenario sc = sample_scenario(p);
    const RangeSet rs = synthesize_ranges(sc, p);
    for (int n_max : {1, 3, 10}) {
      SrMccOptions o;
      o.n_max = n_max;
      const LocalizationResult r = sr_mcc_localize(sc.sensors, rs.ranges, o);
      EXPECT_LE(r.iterations, n_max);
      EXPECT_EQ(static_cast<int>(r.objective_trace.size()), r.iterations);
      EXPECT_TRUE((r.auxiliary.array() >= -1.0).all());
      EXPECT_TRUE((r.auxiliary.array() < 0.0).all());
    }
  }
}

TEST(SrMccLocalize, FixedKernelAscent) {
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const ScenarioParams p = nlos_params(seed);
    const Scenario sc = sample_scenario(p);
    const RangeSet rs = synthesize_ranges(sc, p);
    SrMccOptions o;
    o.fixed_sigma = 4.0;
    o.n_max = 25;
    const LocalizationResult r = sr_mcc_localize(sc.sensors, rs.ranges, o);
    const double L = static_cast<double>(sc.sensors.rows());
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
      EXPECT_GE(r.objective_trace[k], r.objective_trace[k - 1] - 1e-12 * std::abs(r.objective_trace[k - 1]))
          << "seed " << seed << " k " << k;
      EXPECT_LE(r.objective_trace[k], L + 1e-12);
    }
    const KernelSize sigma(4.0);
    for (std::size_t k = 1; k < r.iterates.size(); ++k) {
      const double prev = correntropy_objective(r.iterates[k - 1], sc.sensors, rs.ranges, sigma);
      const double next = correntropy_objective(r.iterates[k], sc.sensors, rs.ranges, sigma);
      // x-steps are exact only up to the psi stopping tolerance.
      EXPECT_GE(next, prev - 1e-9 * prev) << "seed " << seed << " k " << k;
    }
  }
}

TEST(SrMccLocalize, MinimalGeometryFlagged) {
  Eigen::MatrixXd sensors(3, 2);
  sensors << 0, 0, 10, 0, 0, 10;
  const Eigen::Vector2d source(3, 4);
  const LocalizationResult r = sr_mcc_localize(sensors, exact_ranges(sensors, source));
  EXPECT_TRUE(r.minimal_geometry);
  EXPECT_LT((r.x_hat - source).norm(), 1e-6);
}

TEST(SrMccLocalize, CollinearSensorsFail) {
  Eigen::MatrixXd sensors(4, 2);
  sensors << 0, 0, 1, 0, 2, 0, 3, 0;
  EXPECT_THROW(sr_mcc_localize(sensors, Eigen::Vector4d(1, 1, 2, 3)), NumericalError);
}

TEST(SrLsLocalize, NoiselessExactRecovery) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(gen, 5 + trial % 6, 20.0, 0.0);
    EXPECT_LT((sr_ls_localize(inst.sensors, inst.ranges).x_hat - inst.source).norm(), 1e-9);
  }
}

TEST(SrLsLocalize, MatchesUnweightedGridOracle) {
  std::mt19937_64 gen(12);
  const auto inst = oracle::random_instance(gen, 6, 20.0, 0.3);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(6);
  const auto grid = oracle::grid_minimize(0.0, 20.0, 0.01, [&](double x, double y) {
    return oracle::weighted_sr_cost(x, y, inst.sensors, inst.ranges, w);
  });
  const Eigen::VectorXd x = sr_ls_localize(inst.sensors, inst.ranges).x_hat;
  EXPECT_LT((x - grid.best_point).norm(), 0.01 * std::sqrt(2.0));
  EXPECT_LE(oracle::weighted_sr_cost(x, inst.sensors, inst.ranges, w), grid.best_cost + grid.cell_variation);
}
