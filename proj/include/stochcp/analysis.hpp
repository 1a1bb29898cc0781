#pragma once

#include "stochcp/compiler.hpp"
#include "stochcp/reduction.hpp"
#include "stochcp/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stochcp {

/// Values of the first-period decisions (stage-1 and robust variables) by flat name.
using Decisions = std::vector<std::pair<std::string, std::int64_t>>;

struct SolvedValue {
  SolveStatus status = SolveStatus::Infeasible;
  bool proven = false;
  std::optional<Rational> value;
  Decisions decisions;
  SolveStats stats;
};

/// Compile over `tree` and solve; `fixed` pins first-period decisions by name.
SolvedValue solve_on_tree(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits,
                          const Decisions& fixed = {});

SolvedValue stochastic_solution(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits = {});

/// Probability-weighted optimum of the single-scenario sub-models.
SolvedValue wait_and_see(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits = {});

/// Optimum of the full model with first-period decisions fixed at the
/// expected-value scenario's optimum. Infeasible when the fixing is.
SolvedValue expected_value_solution(const StochasticModel& model, const ScenarioTree& tree,
                                    const SolveLimits& limits = {});

struct InfoStats {
  Objective::Direction direction = Objective::Direction::Minimize;
  SolvedValue ss;
  SolvedValue wss;
  SolvedValue evs;
  /// Present when the inputs are proven; oriented so that both are >= 0.
  std::optional<Rational> evpi;
  std::optional<Rational> vss;
};

InfoStats evpi_vss(const StochasticModel& model, const ScenarioTree& tree, const SolveLimits& limits = {});

struct ErrorCurvePoint {
  ReductionSpec::Kind method = ReductionSpec::Kind::Top;
  double fraction = 1.0;
  std::size_t kept = 0;
  Decisions decisions;
  bool feasible = false;
  std::optional<Rational> committed;
  /// Normalized regret in [0,1]; absent for infeasible commitments.
  std::optional<Rational> error;
};

struct ErrorCurve {
  Rational optimum;
  std::optional<Rational> worst;
  std::vector<ErrorCurvePoint> points;
};

/// For every (method, fraction): reduce, solve, commit to the first-period
/// decisions, re-solve the full model, normalize against the full optimum and
/// the worst committed value seen in this run.
ErrorCurve reduction_error_curve(const StochasticModel& model, const ScenarioTree& tree,
                                 const std::vector<ReductionSpec::Kind>& methods, const std::vector<double>& fractions,
                                 std::uint64_t seed, const SolveLimits& limits = {});

/// Number of scenarios kept for `fraction` of `total`: ceil, clamped to 1..total.
std::size_t kept_count(double fraction, std::size_t total);

}  // namespace stochcp
