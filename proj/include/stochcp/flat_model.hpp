#pragma once

#include "stochcp/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stochcp {

struct FlatVar {
  std::string name;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  /// Search priority: lower is branched first (tree stage of the variable).
  int priority = 0;
  bool aux = false;
};

struct LinTerm {
  int var = 0;
  std::int64_t coef = 0;
};

/// Normalized constraint over integer variables.
///   Linear:  sum(terms) op rhs, op in {Eq, Ne, Le}
///   Reified: z <-> (sum(terms) op rhs), z in {0,1}
///   Product: z = args[0] * args[1]
///   Min/Max: z = min/max(args)
struct FlatConstraint {
  enum class Kind { Linear, Reified, Product, Min, Max };
  Kind kind = Kind::Linear;
  std::vector<LinTerm> terms;
  CmpOp op = CmpOp::Le;
  std::int64_t rhs = 0;
  int z = -1;
  std::vector<int> args;
  std::string origin;

  /// Every variable the constraint mentions (z first when present).
  std::vector<int> scope() const;
};

struct DeterministicModel {
  std::vector<FlatVar> vars;
  std::vector<FlatConstraint> constraints;
  Objective::Direction direction = Objective::Direction::Satisfy;
  /// Objective = constant + sum(coef * var), exact rationals, sorted by var.
  std::vector<std::pair<int, Rational>> objective;
  Rational objective_constant = 0;
};

/// Exact objective of a total assignment.
Rational objective_value(const DeterministicModel& model, const std::vector<std::int64_t>& values);

/// True when the constraint holds under a total assignment.
bool satisfied(const FlatConstraint& c, const std::vector<std::int64_t>& values);

std::string describe(const DeterministicModel& model, const FlatConstraint& c);

}  // namespace stochcp
