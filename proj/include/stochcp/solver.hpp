#pragma once

#include "stochcp/flat_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stochcp {

struct SolveLimits {
  std::optional<std::uint64_t> max_nodes;
  std::optional<double> max_seconds;
  /// Component cache budget; past it new entries are no longer stored.
  std::size_t cache_bytes = std::size_t{1} << 30;
};

struct SolveStats {
  std::uint64_t nodes = 0;
  std::uint64_t failures = 0;
  std::uint64_t choice_points = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_entries = 0;
  double seconds = 0;
};

enum class SolveStatus { Optimal, Satisfiable, Infeasible, ResourceLimit };

std::string to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  /// Present for Optimal and Satisfiable. A limit hit with an incumbent in hand
  /// reports Satisfiable with limit_reached set.
  std::optional<std::vector<std::int64_t>> assignment;
  std::optional<Rational> objective;
  bool limit_reached = false;
  SolveStats stats;

  bool proven() const { return !limit_reached && (status == SolveStatus::Optimal || status == SolveStatus::Infeasible); }
};

/// Depth-first branch and bound with bounds propagation. Independent sub-problems
/// (connected components of the unfixed variables) are solved separately and their
/// optima cached by residual state.
SolveResult solve(const DeterministicModel& model, const SolveLimits& limits = {});

/// Bounds propagation on its own: returns the fixpoint domains, or nullopt on
/// inconsistency. `domains` overrides the declared variable domains when given.
std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> propagate(
    const DeterministicModel& model, const std::vector<std::pair<std::int64_t, std::int64_t>>* domains = nullptr);

struct Evaluation {
  Rational objective;
  std::vector<std::string> violations;

  bool feasible() const { return violations.empty(); }
};

/// Checks a total assignment against every domain and constraint. Throws
/// std::invalid_argument on a partial assignment.
Evaluation evaluate(const DeterministicModel& model, const std::vector<std::int64_t>& values);

}  // namespace stochcp
