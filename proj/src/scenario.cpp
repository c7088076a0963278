#include "toaloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "toaloc/errors.hpp"

namespace toaloc {

void ScenarioParams::validate() const {
  if (dim < 1) {
    throw ConfigError("dimension must be at least 1");
  }
  if (sensors < dim + 1) {
    throw ConfigError("need at least d+1 = " + std::to_string(dim + 1) + " sensors");
  }
  if (!(region > 0.0) || !std::isfinite(region)) {
    throw ConfigError("region side length must be positive");
  }
  if (!(sigma_g2 >= 0.0) || !std::isfinite(sigma_g2)) {
    throw ConfigError("sigma_g2 must be nonnegative");
  }
  if (!(b_max >= 0.0) || !std::isfinite(b_max)) {
    throw ConfigError("NLOS bias bound b must be nonnegative");
  }
  if (l_nlos < 0 || l_nlos > sensors) {
    throw ConfigError("l_nlos must lie in [0, L]");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stream);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Scenario sample_scenario(const ScenarioParams& params) {
  params.validate();
  std::mt19937_64 deploy(derive_seed(params.seed, Stream::kDeployment));
  std::uniform_real_distribution<double> coord(0.0, params.region);

  Scenario sc;
  sc.source.resize(params.dim);
  for (int j = 0; j < params.dim; ++j) {
    sc.source(j) = coord(deploy);
  }
  sc.sensors.resize(params.sensors, params.dim);
  for (int i = 0; i < params.sensors; ++i) {
    for (int j = 0; j < params.dim; ++j) {
      sc.sensors(i, j) = coord(deploy);
    }
  }

  // Partial Fisher-Yates: the first l_nlos slots are a uniform subset.
  std::mt19937_64 select(derive_seed(params.seed, Stream::kNlosSelection));
  std::vector<int> order(params.sensors);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < params.l_nlos; ++i) {
    std::uniform_int_distribution<int> pick(i, params.sensors - 1);
    std::swap(order[i], order[pick(select)]);
  }
  sc.nlos_mask.assign(params.sensors, false);
  for (int i = 0; i < params.l_nlos; ++i) {
    sc.nlos_mask[order[i]] = true;
  }
  return sc;
}

RangeSet synthesize_ranges(const Scenario& sc, const ScenarioParams& params) {
  params.validate();
  const auto count = static_cast<int>(sc.sensors.rows());
  if (count != params.sensors || static_cast<int>(sc.nlos_mask.size()) != count) {
    throw ConfigError("scenario does not match its parameters");
  }

  std::mt19937_64 noise_gen(derive_seed(params.seed, Stream::kNoise));
  std::mt19937_64 bias_gen(derive_seed(params.seed, Stream::kBias));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sigma_g = std::sqrt(params.sigma_g2);

  RangeSet rs;
  rs.truth_distances = (sc.sensors.rowwise() - sc.source.transpose()).rowwise().norm();
  rs.ranges.resize(count);
  for (int i = 0; i < count; ++i) {
    // Both draws happen on every path so the streams stay aligned across
    // different NLOS masks and noise levels.
    const double noise = sigma_g * normal(noise_gen);
    const double bias = params.b_max * unit(bias_gen);
    double r = rs.truth_distances(i) + noise + (sc.nlos_mask[i] ? bias : 0.0);
    if (r < 0.0) {
      r = 0.0;
      ++rs.clamped;
    }
    rs.ranges(i) = r;
  }
  return rs;
}

}  // namespace toaloc
