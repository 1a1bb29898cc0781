#pragma once

#include "stochcp/flat_model.hpp"
#include "stochcp/scenario_tree.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stochcp {

/// Identity of a flat copy of a decision variable: original indices plus the tree
/// node (stage-indexed), the leaf (no stage index) or neither (robust).
struct FlatVarKey {
  std::size_t decision = 0;
  std::vector<std::int64_t> indices;
  int node = -1;
  int leaf = -1;

  auto operator<=>(const FlatVarKey&) const = default;
};

class NodeIndexMap {
 public:
  void add(const FlatVarKey& key, int var) { map_.emplace(key, var); }
  std::optional<int> find(const FlatVarKey& key) const;
  const std::map<FlatVarKey, int>& entries() const { return map_; }

 private:
  std::map<FlatVarKey, int> map_;
};

/// A first-period decision: a stage-1 or robust variable copy, keyed by name so it
/// can be matched across compilations against different trees.
struct Commitment {
  std::string key;
  int var = -1;
};

struct CompiledModel {
  DeterministicModel flat;
  NodeIndexMap index;
  std::vector<Commitment> first_stage;
  std::vector<int> nb_nodes;
  std::size_t scenario_count = 0;
};

/// Certainty-equivalent compilation: hard constraints per scenario (deduplicated),
/// chance constraints as probability-weighted reified sums, objective per kind.
CompiledModel compile(const StochasticModel& model, const ScenarioTree& tree);

/// Canonical text dump of a compiled model.
std::string emit_flat(const CompiledModel& compiled);

/// Stable 64-bit FNV-1a hash of emit_flat output.
std::uint64_t flat_hash(const CompiledModel& compiled);

/// Flat copy of decision variable `name` at `indices` in scenario `leaf`; nullopt
/// when the copy was never materialized.
std::optional<int> flat_var_for(const StochasticModel& model, const ScenarioTree& tree, const CompiledModel& compiled,
                                const std::string& name, const std::vector<std::int64_t>& indices, std::size_t leaf);

}  // namespace stochcp
