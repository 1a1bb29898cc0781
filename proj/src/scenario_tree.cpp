#include "stochcp/scenario_tree.hpp"

#include <algorithm>
#include <map>

namespace stochcp {

namespace {

constexpr std::size_t kMaxTreeNodes = 20'000'000;

struct VarChild {
  int state = 0;
  std::size_t outcome = 0;
  Rational value;
  Rational prob;
};

/// Branching structure of a single stochastic variable.
class VarBranching {
 public:
  VarBranching(const StochVar& sv, int stages) : sv_(sv), stages_(stages) {
    const auto& groups = sv.distribution.groups;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      Rational sum = 0;
      for (const auto& o : groups[g]) {
        if (o.prob <= 0) {
          throw ModelError("malformed-distribution",
                           "stochastic variable '" + sv.name + "' group " + std::to_string(g + 1) +
                               " has a non-positive probability",
                           sv.span);
        }
        sum += o.prob;
      }
      if (groups[g].empty() || !sums_to_one(sum)) {
        throw ModelError("malformed-distribution",
                         "stochastic variable '" + sv.name + "' group " + std::to_string(g + 1) +
                             " probabilities sum to " + to_exact_string(sum),
                         sv.span);
      }
      sums_.push_back(sum);
    }
    if (conditional()) {
      // stage t var-nodes own consecutive groups in breadth-first order
      std::size_t next_group = 0;
      std::size_t count = 1;
      for (int t = 1; t <= stages; ++t) {
        group_offset_.push_back(next_group);
        std::vector<std::size_t> bases;
        std::size_t children = 0;
        for (std::size_t k = 0; k < count; ++k) {
          if (next_group + k >= groups.size()) {
            throw ModelError("malformed-distribution",
                             "stochastic variable '" + sv.name + "' has too few branch groups for stage " +
                                 std::to_string(t),
                             sv.span);
          }
          bases.push_back(children);
          children += groups[next_group + k].size();
        }
        child_base_.push_back(std::move(bases));
        next_group += count;
        count = children;
      }
      if (next_group != groups.size()) {
        throw ModelError("malformed-distribution",
                         "stochastic variable '" + sv.name + "' has " + std::to_string(groups.size()) +
                             " branch groups, the tree needs " + std::to_string(next_group),
                         sv.span);
      }
    } else if (groups.size() != static_cast<std::size_t>(stages)) {
      throw ModelError("malformed-distribution",
                       "stochastic variable '" + sv.name + "' has " + std::to_string(groups.size()) +
                           " stage distributions, expected " + std::to_string(stages),
                       sv.span);
    }
  }

  bool conditional() const { return sv_.distribution.kind == Distribution::Kind::Conditional; }

  std::vector<VarChild> children(int stage, int state) const {
    const auto& groups = sv_.distribution.groups;
    std::vector<VarChild> out;
    if (conditional()) {
      const auto t = static_cast<std::size_t>(stage - 1);
      const std::size_t g = group_offset_[t] + static_cast<std::size_t>(state);
      const std::size_t base = child_base_[t][static_cast<std::size_t>(state)];
      for (std::size_t i = 0; i < groups[g].size(); ++i) {
        out.push_back({static_cast<int>(base + i), base + i, groups[g][i].value, groups[g][i].prob / sums_[g]});
      }
    } else {
      const auto g = static_cast<std::size_t>(stage - 1);
      for (std::size_t i = 0; i < groups[g].size(); ++i) {
        out.push_back({0, i, groups[g][i].value, groups[g][i].prob / sums_[g]});
      }
    }
    return out;
  }

 private:
  const StochVar& sv_;
  int stages_;
  std::vector<Rational> sums_;
  std::vector<std::size_t> group_offset_;
  std::vector<std::vector<std::size_t>> child_base_;
};

}  // namespace

ScenarioTree::ScenarioTree(int stages, std::size_t var_count, std::vector<TreeNode> nodes)
    : stages_(stages), var_count_(var_count), nodes_(std::move(nodes)) {
  stage_offset_.assign(static_cast<std::size_t>(stages_) + 2, 0);
  for (auto& n : nodes_) n.children.clear();
  std::vector<int> per_stage(static_cast<std::size_t>(stages_) + 1, 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& n = nodes_[i];
    n.state = per_stage[static_cast<std::size_t>(n.stage - 1)]++;
    if (n.parent >= 0) nodes_[static_cast<std::size_t>(n.parent)].children.push_back(static_cast<int>(i));
    if (n.stage == stages_ + 1) leaves_.push_back(static_cast<int>(i));
  }
  for (int s = 1; s <= stages_ + 1; ++s) {
    stage_offset_[static_cast<std::size_t>(s)] =
        stage_offset_[static_cast<std::size_t>(s - 1)] + per_stage[static_cast<std::size_t>(s - 1)];
  }
  const auto width = static_cast<std::size_t>(stages_) + 1;
  paths_.assign(leaves_.size() * width, -1);
  for (std::size_t l = 0; l < leaves_.size(); ++l) {
    int id = leaves_[l];
    while (id >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(id)];
      paths_[l * width + static_cast<std::size_t>(n.stage - 1)] = id;
      id = n.parent;
    }
  }
}

std::vector<int> ScenarioTree::nb_nodes() const {
  std::vector<int> out;
  for (int s = 1; s <= stages_ + 1; ++s) out.push_back(stage_size(s));
  return out;
}

int ScenarioTree::node_at(int stage, std::size_t leaf) const {
  return paths_[leaf * (static_cast<std::size_t>(stages_) + 1) + static_cast<std::size_t>(stage - 1)];
}

ScenarioTree ScenarioTree::restrict_to(const std::vector<std::pair<std::size_t, Rational>>& survivors) const {
  std::vector<Rational> mass(nodes_.size(), 0);
  std::vector<char> keep(nodes_.size(), 0);
  for (const auto& [leaf, prob] : survivors) {
    for (int s = 1; s <= stages_ + 1; ++s) {
      const auto id = static_cast<std::size_t>(node_at(s, leaf));
      mass[id] += prob;
      keep[id] = 1;
    }
  }
  std::vector<int> remap(nodes_.size(), -1);
  std::vector<TreeNode> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!keep[i]) continue;
    TreeNode n = nodes_[i];
    n.node_prob = mass[i];
    if (n.parent >= 0) {
      const auto p = static_cast<std::size_t>(n.parent);
      n.branch_prob = mass[p] == 0 ? Rational(0) : Rational(mass[i] / mass[p]);
      n.parent = remap[p];
    } else {
      n.branch_prob = 1;
    }
    remap[i] = static_cast<int>(out.size());
    out.push_back(std::move(n));
  }
  return ScenarioTree(stages_, var_count_, std::move(out));
}

ScenarioTree build_tree(const StochasticModel& model) {
  const int m = std::max(1, model.stages);
  std::vector<VarBranching> vars;
  vars.reserve(model.stoch_vars.size());
  for (const auto& sv : model.stoch_vars) vars.emplace_back(sv, m);

  std::vector<TreeNode> nodes;
  std::vector<std::vector<int>> states;  // per node, per var
  TreeNode root;
  root.stage = 1;
  nodes.push_back(root);
  states.emplace_back(vars.size(), 0);

  std::size_t stage_begin = 0;
  for (int t = 1; t <= m; ++t) {
    const std::size_t stage_end = nodes.size();
    for (std::size_t id = stage_begin; id < stage_end; ++id) {
      std::vector<std::vector<VarChild>> options;
      for (std::size_t v = 0; v < vars.size(); ++v) options.push_back(vars[v].children(t, states[id][v]));
      std::vector<std::size_t> pick(vars.size(), 0);
      while (true) {
        TreeNode child;
        child.stage = t + 1;
        child.parent = static_cast<int>(id);
        child.branch_prob = 1;
        std::vector<int> child_states(vars.size(), 0);
        for (std::size_t v = 0; v < vars.size(); ++v) {
          const auto& c = options[v][pick[v]];
          child.values.push_back(c.value);
          child.outcomes.push_back({OutcomeRef{c.outcome, 1}});
          child.branch_prob *= c.prob;
          child_states[v] = c.state;
        }
        child.node_prob = nodes[id].node_prob * child.branch_prob;
        nodes.push_back(std::move(child));
        states.push_back(std::move(child_states));
        if (nodes.size() > kMaxTreeNodes) {
          throw ModelError("tree-too-large", "scenario tree exceeds " + std::to_string(kMaxTreeNodes) + " nodes");
        }
        // odometer, last variable fastest
        bool done = true;
        for (std::size_t v = vars.size(); v-- > 0;) {
          if (++pick[v] < options[v].size()) {
            done = false;
            break;
          }
          pick[v] = 0;
        }
        if (done) break;
      }
    }
    stage_begin = stage_end;
  }
  return ScenarioTree(m, vars.size(), std::move(nodes));
}

std::vector<Scenario> enumerate_scenarios(const ScenarioTree& tree) {
  std::vector<Scenario> out;
  out.reserve(tree.leaf_count());
  for (std::size_t l = 0; l < tree.leaf_count(); ++l) {
    Scenario s;
    s.index = l;
    for (int t = 2; t <= tree.stages() + 1; ++t) s.values.push_back(tree.node(tree.node_at(t, l)).values);
    s.probability = tree.node(tree.leaf_node(l)).node_prob;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::vector<Rational>> expected_value_assignment(const ScenarioTree& tree) {
  std::vector<std::vector<Rational>> out;
  for (int t = 2; t <= tree.stages() + 1; ++t) {
    std::vector<Rational> acc(tree.var_count(), 0);
    for (int id = tree.stage_begin(t); id < tree.stage_begin(t) + tree.stage_size(t); ++id) {
      const auto& n = tree.node(id);
      for (std::size_t v = 0; v < tree.var_count(); ++v) acc[v] += n.node_prob * n.values[v];
    }
    out.push_back(std::move(acc));
  }
  return out;
}

ScenarioTree expected_value_tree(const ScenarioTree& tree) {
  const auto means = expected_value_assignment(tree);
  std::vector<TreeNode> nodes;
  TreeNode root;
  root.stage = 1;
  nodes.push_back(root);
  for (int t = 2; t <= tree.stages() + 1; ++t) {
    TreeNode n;
    n.stage = t;
    n.parent = static_cast<int>(nodes.size()) - 1;
    n.values = means[static_cast<std::size_t>(t - 2)];
    for (std::size_t v = 0; v < tree.var_count(); ++v) {
      std::map<std::size_t, Rational> mix;
      for (int id = tree.stage_begin(t); id < tree.stage_begin(t) + tree.stage_size(t); ++id) {
        const auto& src = tree.node(id);
        for (const auto& ref : src.outcomes[v]) mix[ref.outcome] += src.node_prob * ref.weight;
      }
      std::vector<OutcomeRef> refs;
      for (auto& [o, w] : mix) refs.push_back({o, w});
      n.outcomes.push_back(std::move(refs));
    }
    nodes.push_back(std::move(n));
  }
  return ScenarioTree(tree.stages(), tree.var_count(), std::move(nodes));
}

std::vector<std::string> check_tree(const ScenarioTree& tree) {
  std::vector<std::string> out;
  const auto& nodes = tree.nodes();
  if (nodes.empty()) return {"empty tree"};
  if (nodes[0].node_prob != 1) out.push_back("root probability is " + to_exact_string(nodes[0].node_prob));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.parent >= 0) {
      const auto& p = tree.node(n.parent);
      if (n.node_prob != p.node_prob * n.branch_prob) {
        out.push_back("node " + std::to_string(i) + " probability is not parent times branch");
      }
      if (p.stage + 1 != n.stage) out.push_back("node " + std::to_string(i) + " skips a stage");
    }
    if (n.stage <= tree.stages()) {
      if (n.children.empty()) {
        out.push_back("internal node " + std::to_string(i) + " has no children");
        continue;
      }
      Rational sum = 0;
      for (int c : n.children) sum += tree.node(c).branch_prob;
      if (!sums_to_one(sum)) out.push_back("children of node " + std::to_string(i) + " sum to " + to_exact_string(sum));
    }
  }
  Rational leaves = 0;
  for (std::size_t l = 0; l < tree.leaf_count(); ++l) leaves += tree.node(tree.leaf_node(l)).node_prob;
  if (!sums_to_one(leaves)) out.push_back("leaf probabilities sum to " + to_exact_string(leaves));
  const auto nb = tree.nb_nodes();
  if (static_cast<std::size_t>(nb.back()) != tree.leaf_count()) out.push_back("leaf count mismatch");
  return out;
}

}  // namespace stochcp
