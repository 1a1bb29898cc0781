#pragma once

#include "stochcp/scenario_tree.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace stochcp {

/// Platform-independent draws on top of std::mt19937_64 (the standard library
/// distributions are implementation-defined, these are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n);
  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct ReducedScenarioSet {
  /// Surviving leaf indices of the source tree, ascending. Empty for the
  /// synthetic expected-value scenario.
  std::vector<std::size_t> survivors;
  std::vector<Rational> probabilities;
  ScenarioTree tree;
};

/// Per stochastic coordinate (stage, variable), the CDF cell used by each draw.
struct LhsDrawLog {
  std::vector<std::vector<std::size_t>> cells;
};

struct DgrStep {
  std::size_t deleted = 0;
  std::size_t absorber = 0;
};

/// Parameter vector of a leaf: realized values stage by stage, variable by variable.
std::vector<Rational> parameter_vector(const ScenarioTree& tree, std::size_t leaf);

/// Euclidean distance matrix between leaf parameter vectors.
std::vector<std::vector<double>> scenario_distances(const ScenarioTree& tree);

ReducedScenarioSet reduce_expected(const ScenarioTree& tree);
ReducedScenarioSet reduce_top_k(const ScenarioTree& tree, std::size_t k);
ReducedScenarioSet reduce_sample_mc(const ScenarioTree& tree, std::size_t k, std::uint64_t seed);
ReducedScenarioSet reduce_lhs(const ScenarioTree& tree, std::size_t n, std::uint64_t seed, LhsDrawLog* log = nullptr);
ReducedScenarioSet reduce_dgr(const ScenarioTree& tree, std::size_t n, std::vector<DgrStep>* steps = nullptr);

/// Dispatch on a directive. `count` must be set for every kind except Expected.
ReducedScenarioSet reduce(const ScenarioTree& tree, const ReductionSpec& spec);

}  // namespace stochcp
