#pragma once

#include "stochcp/rational.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stochcp {

struct Span {
  int line = 0;
  int column = 0;
};

enum class CmpOp { Eq, Ne, Lt, Gt, Le, Ge };

std::string to_string(CmpOp op);
CmpOp negate(CmpOp op);
/// a op b  <=>  b flip(op) a
CmpOp flip(CmpOp op);
bool compare(const Rational& a, CmpOp op, const Rational& b);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// `var in range` inside forall/sum. `range` is a named range/enum reference or a `lo..hi` literal.
struct Binding {
  std::string var;
  ExprPtr range;
  Span span;
};

struct Expr {
  enum class Kind {
    Number,    // number
    Ref,       // name or name[args...]
    Neg,       // -args[0]
    Add,       // args[0] + args[1]
    Sub,
    Mul,
    Div,
    Min,       // min(args...)
    Max,       // max(args...)
    Sum,       // sum(bindings) args[0]
    Compare,   // args[0] op args[1], boolean or reified 0/1
    Expected,  // expected(args[0]), objective context only
    RangeLit,  // args[0]..args[1]
  };

  Kind kind = Kind::Number;
  Rational number;
  std::string name;
  std::string dep;  // `name[...]^dep` tag on constant references
  std::vector<ExprPtr> args;
  CmpOp op = CmpOp::Eq;
  std::vector<Binding> bindings;
  Span span;

  static ExprPtr make_number(Rational v, Span s = {});
  static ExprPtr make_ref(std::string name, std::vector<ExprPtr> indices = {}, Span s = {});
  static ExprPtr make_unary(Kind k, ExprPtr a, Span s = {});
  static ExprPtr make_binary(Kind k, ExprPtr a, ExprPtr b, Span s = {});
  static ExprPtr make_compare(CmpOp op, ExprPtr a, ExprPtr b, Span s = {});
  static ExprPtr make_call(Kind k, std::vector<ExprPtr> args, Span s = {});
  static ExprPtr make_sum(std::vector<Binding> bindings, ExprPtr body, Span s = {});
};

/// Canonical text form; parse(print(e)) yields a structurally equal tree.
std::string print_expr(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

/// A concrete integer index set: a literal range, a named range or an enum (labels non-empty).
struct IndexRange {
  std::string name;
  std::int64_t lo = 1;
  std::int64_t hi = 0;
  std::vector<std::string> labels;

  std::int64_t size() const { return hi >= lo ? hi - lo + 1 : 0; }
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
  bool is_enum() const { return !labels.empty(); }
  std::string label(std::int64_t v) const;
};

struct Outcome {
  Rational value;
  Rational prob;
};

struct Distribution {
  enum class Kind { Independent, Conditional, Uniform };
  Kind kind = Kind::Independent;
  /// Independent/Uniform: one outcome list per stage.
  /// Conditional: branch groups in breadth-first order of their parent nodes.
  std::vector<std::vector<Outcome>> groups;
};

struct StochVar {
  std::string name;
  IndexRange stage_range;
  Distribution distribution;
  bool is_float = false;
  Span span;
};

struct DecisionVar {
  std::string name;
  std::vector<IndexRange> dims;
  std::optional<std::size_t> stage_dim;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool robust = false;
  Span span;
};

/// Scalar or array constant. A constant tagged `^stochvar` stores, per cell, one value per
/// outcome of that variable at the cell's stage (a single value means outcome-invariant).
struct Constant {
  std::string name;
  std::vector<IndexRange> dims;
  std::vector<Rational> values;
  std::optional<std::size_t> depends_on;
  std::optional<std::size_t> stage_dim;
  std::vector<std::vector<Rational>> outcome_values;
  Span span;

  std::optional<std::size_t> offset(const std::vector<std::int64_t>& index) const;
};

struct ConstraintDecl {
  enum class Kind { Hard, Chance };
  Kind kind = Kind::Hard;
  std::vector<Binding> quantifiers;
  ExprPtr body;
  CmpOp threshold_op = CmpOp::Ge;
  ExprPtr threshold_expr;
  Rational threshold;
  Span span;
};

struct Objective {
  enum class Direction { Satisfy, Minimize, Maximize };
  enum class Kind { Expected, MeanVariance, Spread, Downside, Upside };
  Direction direction = Direction::Satisfy;
  Kind kind = Kind::Expected;
  ExprPtr body;
  std::optional<Rational> lambda;
  Span span;
};

std::string to_string(Objective::Kind kind);

struct ReductionSpec {
  enum class Kind { Expected, Top, Sample, Lhs, Dgr };
  Kind kind = Kind::Expected;
  std::optional<std::size_t> count;
  std::uint64_t seed = 20240607;

  std::string describe() const;
};

/// Parses "expected", "top 3", "sample 10", "lhs 10", "DGR 10" (case-insensitive kind).
std::optional<ReductionSpec> parse_reduction_spec(const std::string& text);

/// The bound stochastic model: decision variables V, stochastic variables S, domains D,
/// distributions P, constraints C and per-chance-constraint thresholds.
struct StochasticModel {
  std::vector<IndexRange> ranges;
  std::vector<Constant> constants;
  std::vector<DecisionVar> decision_vars;
  std::vector<StochVar> stoch_vars;
  std::vector<ConstraintDecl> constraints;
  Objective objective;
  std::optional<ReductionSpec> scenario_directive;
  int stages = 1;
  std::optional<IndexRange> stage_range;
  std::int64_t maxint = 1'000'000;

  const IndexRange* find_range(const std::string& name) const;
  const Constant* find_constant(const std::string& name) const;
  std::optional<std::size_t> find_decision(const std::string& name) const;
  std::optional<std::size_t> find_stoch(const std::string& name) const;
  /// Enum member lookup across all enums: returns the member ordinal.
  std::optional<std::int64_t> find_enum_member(const std::string& name) const;
};

struct Violation {
  enum class Kind {
    DuplicateName,
    UnresolvedName,
    StageIndex,
    MalformedDistribution,
    EmptyDomain,
    BadThreshold,
    BadObjective,
  };
  Kind kind;
  std::string message;
  Span span;
};

std::string to_string(Violation::Kind kind);

/// Returns every invariant violation; an empty report means the model is valid.
std::vector<Violation> validate(const StochasticModel& model);

inline constexpr double kProbabilityTolerance = 1e-9;

/// |sum - 1| <= kProbabilityTolerance
bool sums_to_one(const Rational& sum);

}  // namespace stochcp
