#pragma once

#include "stochcp/model.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace stochcp {

/// Error raised by model-level operations. `code` is a stable kebab-case tag.
class ModelError : public std::runtime_error {
 public:
  ModelError(std::string code, const std::string& message, Span span = {})
      : std::runtime_error(message), code_(std::move(code)), span_(span) {}
  const std::string& code() const { return code_; }
  Span span() const { return span_; }

 private:
  std::string code_;
  Span span_;
};

/// Weighted reference to an outcome of one stochastic variable at one stage.
/// Regular nodes carry a single reference with weight 1; the expected-value
/// scenario carries the full mixture.
struct OutcomeRef {
  std::size_t outcome = 0;
  Rational weight = 1;
};

struct TreeNode {
  int stage = 1;  // 1..m+1
  int state = 0;  // 0-based position among the nodes of this stage
  int parent = -1;
  std::vector<int> children;
  Rational branch_prob = 1;
  Rational node_prob = 1;
  /// Realized value per stochastic variable (empty at the root).
  std::vector<Rational> values;
  std::vector<std::vector<OutcomeRef>> outcomes;
};

struct Scenario {
  std::size_t index = 0;
  /// values[t-1][v]: stochastic variable v observed at stage t.
  std::vector<std::vector<Rational>> values;
  Rational probability;
};

class ScenarioTree {
 public:
  ScenarioTree() = default;

  /// Nodes must be given stage by stage; children lists and states are recomputed.
  ScenarioTree(int stages, std::size_t var_count, std::vector<TreeNode> nodes);

  int stages() const { return stages_; }
  std::size_t var_count() const { return var_count_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  /// Node counts for stages 1..m+1.
  std::vector<int> nb_nodes() const;
  /// Global id of the first node of `stage`.
  int stage_begin(int stage) const { return stage_offset_[static_cast<std::size_t>(stage - 1)]; }
  int stage_size(int stage) const {
    return stage_offset_[static_cast<std::size_t>(stage)] - stage_offset_[static_cast<std::size_t>(stage - 1)];
  }

  std::size_t leaf_count() const { return leaves_.size(); }
  int leaf_node(std::size_t leaf) const { return leaves_[leaf]; }
  /// Global node id on the path of `leaf` at `stage` (1..m+1).
  int node_at(int stage, std::size_t leaf) const;
  /// 0-based state index within `stage`, as in ScenTree[stage][leaf].
  int state_at(int stage, std::size_t leaf) const { return node(node_at(stage, leaf)).state; }

  /// Restricts to the given leaves with new probabilities; node probabilities are
  /// re-derived bottom-up and internal nodes without surviving leaves are dropped.
  ScenarioTree restrict_to(const std::vector<std::pair<std::size_t, Rational>>& survivors) const;

 private:
  int stages_ = 0;
  std::size_t var_count_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<int> stage_offset_;
  std::vector<int> leaves_;
  std::vector<int> paths_;  // leaf-major, stages 1..m+1
};

/// Materializes the full scenario tree (Cartesian product across stochastic variables).
ScenarioTree build_tree(const StochasticModel& model);

/// One Scenario per leaf, in leaf order.
std::vector<Scenario> enumerate_scenarios(const ScenarioTree& tree);

/// result[t-1][v] = sum over stage-(t+1) nodes of node_prob * value.
std::vector<std::vector<Rational>> expected_value_assignment(const ScenarioTree& tree);

/// Single-path tree whose values are the stage expectations and whose outcome
/// references hold the full probability mixture.
ScenarioTree expected_value_tree(const ScenarioTree& tree);

/// Violations of the tree invariants (empty when consistent).
std::vector<std::string> check_tree(const ScenarioTree& tree);

}  // namespace stochcp
