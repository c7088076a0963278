#pragma once

// Synthetic TOA trials: uniform deployment in an axis-aligned square/cube,
// zero-mean Gaussian ranging noise on every path and a Uniform[0, b] positive
// bias on a randomly chosen subset of NLOS paths.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace toaloc {

struct ScenarioParams {
  int dim = 2;
  int sensors = 10;
  double region = 20.0;   ///< side length (m); coordinates lie in [0, region]
  double sigma_g2 = 0.0;  ///< Gaussian noise variance (m^2)
  double b_max = 0.0;     ///< NLOS bias upper bound (m)
  int l_nlos = 0;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct Scenario {
  Eigen::VectorXd source;
  Eigen::MatrixXd sensors;  ///< L x d
  std::vector<bool> nlos_mask;
};

struct RangeSet {
  Eigen::VectorXd ranges;
  Eigen::VectorXd truth_distances;
  int clamped = 0;  ///< negative synthesized ranges that were set to 0
};

/// Independent random streams derived from one trial seed.
enum class Stream : std::uint64_t { kDeployment = 1, kNlosSelection = 2, kNoise = 3, kBias = 4 };

/// Stream seed for `stream` under `seed` (SplitMix64 finalizer of a salted seed).
std::uint64_t derive_seed(std::uint64_t seed, Stream stream);

Scenario sample_scenario(const ScenarioParams& params);

RangeSet synthesize_ranges(const Scenario& sc, const ScenarioParams& params);

}  // namespace toaloc
