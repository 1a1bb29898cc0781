#include "stochcp/analysis.hpp"

#include <cmath>
#include <map>

namespace stochcp {

namespace {

bool maximizing(const StochasticModel& model) { return model.objective.direction == Objective::Direction::Maximize; }

/// a is at least as good as b in the model's direction.
bool no_worse(const StochasticModel& model, const Rational& a, const Rational& b) {
  return maximizing(model) ? a >= b : a <= b;
}

}  // namespace

std::size_t kept_count(double fraction, std::size_t total) {
  const double raw = std::ceil(fraction * static_cast<double>(total) - 1e-9);
  if (raw < 1) return 1;
  if (raw > static_cast<double>(total)) return total;
  return static_cast<std::size_t>(raw);
}

SolvedValue solve_on_tree(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits,
                          const Decisions& fixed) {
  CompiledModel compiled = compile(model, tree);
  std::map<std::string, int> by_name;
  for (const auto& c : compiled.first_stage) by_name.emplace(c.key, c.var);
  for (const auto& [name, value] : fixed) {
    auto it = by_name.find(name);
    if (it == by_name.end()) continue;
    auto& v = compiled.flat.vars[static_cast<std::size_t>(it->second)];
    if (value < v.lo || value > v.hi) {
      v.lo = 1;
      v.hi = 0;
    } else {
      v.lo = v.hi = value;
    }
  }
  const SolveResult r = solve(compiled.flat, limits);
  SolvedValue out;
  out.status = r.status;
  out.proven = r.proven();
  out.stats = r.stats;
  if (r.assignment) {
    out.value = r.objective;
    for (const auto& c : compiled.first_stage) {
      out.decisions.emplace_back(c.key, (*r.assignment)[static_cast<std::size_t>(c.var)]);
    }
  }
  return out;
}

SolvedValue stochastic_solution(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits) {
  return solve_on_tree(model, tree, limits);
}

SolvedValue wait_and_see(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits) {
  SolvedValue out;
  out.status = SolveStatus::Optimal;
  out.proven = true;
  Rational total = 0;
  for (std::size_t s = 0; s < tree.leaf_count(); ++s) {
    const ScenarioTree single = tree.restrict_to({{s, Rational(1)}});
    const SolvedValue v = solve_on_tree(model, single, limits);
    out.stats.nodes += v.stats.nodes;
    out.stats.failures += v.stats.failures;
    out.stats.choice_points += v.stats.choice_points;
    out.stats.seconds += v.stats.seconds;
    if (!v.value) {
      out.status = v.status;
      out.proven = v.proven;
      out.value.reset();
      return out;
    }
    if (!v.proven) {
      out.proven = false;
      out.status = v.status;
    }
    total += tree.node(tree.leaf_node(s)).node_prob * *v.value;
  }
  out.value = total;
  return out;
}

SolvedValue expected_value_solution(const StochasticModel& model, const ScenarioTree& tree,
                                    const SolveLimits& limits) {
  const SolvedValue ev = solve_on_tree(model, expected_value_tree(tree), limits);
  if (!ev.value) return ev;
  SolvedValue out = solve_on_tree(model, tree, limits, ev.decisions);
  out.proven = out.proven && ev.proven;
  return out;
}

InfoStats evpi_vss(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits) {
  InfoStats out;
  out.direction = model.objective.direction;
  out.ss = stochastic_solution(model, tree, limits);
  out.wss = wait_and_see(model, tree, limits);
  out.evs = expected_value_solution(model, tree, limits);
  const bool max = maximizing(model);
  if (out.ss.value && out.ss.proven && out.wss.value && out.wss.proven) {
    out.evpi = max ? *out.wss.value - *out.ss.value : *out.ss.value - *out.wss.value;
  }
  if (out.ss.value && out.ss.proven && out.evs.value && out.evs.proven) {
    out.vss = max ? *out.ss.value - *out.evs.value : *out.evs.value - *out.ss.value;
  }
  return out;
}

ErrorCurve reduction_error_curve(const StochasticModel& model, const ScenarioTree& tree,
                                 const std::vector<ReductionSpec::Kind>& methods, const std::vector<double>& fractions,
                                 std::uint64_t seed, const SolveLimits& limits) {
  ErrorCurve curve;
  const SolvedValue full = stochastic_solution(model, tree, limits);
  if (!full.value) {
    throw ModelError("analysis-error", "full model has no solution (" + to_string(full.status) + ")");
  }
  curve.optimum = *full.value;
  std::map<Decisions, SolvedValue> committed_cache;
  for (auto method : methods) {
    for (double fraction : fractions) {
      ErrorCurvePoint p;
      p.method = method;
      p.fraction = fraction;
      ReductionSpec spec;
      spec.kind = method;
      spec.count = kept_count(fraction, tree.leaf_count());
      spec.seed = seed;
      // Keeping every scenario is no reduction, also for the sampling methods.
      const bool all = spec.count >= tree.leaf_count();
      const ReducedScenarioSet reduced = all ? ReducedScenarioSet{} : reduce(tree, spec);
      p.kept = all ? tree.leaf_count() : reduced.tree.leaf_count();
      const SolvedValue small = all ? full : solve_on_tree(model, reduced.tree, limits);
      if (small.value) {
        p.decisions = small.decisions;
        auto it = committed_cache.find(p.decisions);
        if (it == committed_cache.end()) {
          it = committed_cache.emplace(p.decisions, solve_on_tree(model, tree, limits, p.decisions)).first;
        }
        if (it->second.value) {
          p.feasible = true;
          p.committed = it->second.value;
          if (!curve.worst || no_worse(model, *curve.worst, *p.committed)) curve.worst = p.committed;
        }
      }
      curve.points.push_back(std::move(p));
    }
  }
  for (auto& p : curve.points) {
    if (!p.feasible) continue;
    const Rational span = maximizing(model) ? curve.optimum - *curve.worst : *curve.worst - curve.optimum;
    Rational regret = maximizing(model) ? curve.optimum - *p.committed : *p.committed - curve.optimum;
    if (span <= 0 || regret <= 0) {
      p.error = Rational(0);
    } else {
      Rational e = regret / span;
      p.error = e > 1 ? Rational(1) : e;
    }
  }
  return curve;
}

}  // namespace stochcp
