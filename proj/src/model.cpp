#include "stochcp/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace stochcp {

std::string to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Lt: return "<";
    case CmpOp::Gt: return ">";
    case CmpOp::Le: return "<=";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

CmpOp negate(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Ge: return CmpOp::Lt;
  }
  return op;
}

CmpOp flip(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;
  }
}

bool compare(const Rational& a, CmpOp op, const Rational& b) {
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Ge: return a >= b;
  }
  return false;
}

ExprPtr Expr::make_number(Rational v, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Number;
  e->number = std::move(v);
  e->span = s;
  return e;
}

ExprPtr Expr::make_ref(std::string name, std::vector<ExprPtr> indices, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Ref;
  e->name = std::move(name);
  e->args = std::move(indices);
  e->span = s;
  return e;
}

ExprPtr Expr::make_unary(Kind k, ExprPtr a, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = {std::move(a)};
  e->span = s;
  return e;
}

ExprPtr Expr::make_binary(Kind k, ExprPtr a, ExprPtr b, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = {std::move(a), std::move(b)};
  e->span = s;
  return e;
}

ExprPtr Expr::make_compare(CmpOp op, ExprPtr a, ExprPtr b, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Compare;
  e->op = op;
  e->args = {std::move(a), std::move(b)};
  e->span = s;
  return e;
}

ExprPtr Expr::make_call(Kind k, std::vector<ExprPtr> args, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = std::move(args);
  e->span = s;
  return e;
}

ExprPtr Expr::make_sum(std::vector<Binding> bindings, ExprPtr body, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Sum;
  e->bindings = std::move(bindings);
  e->args = {std::move(body)};
  e->span = s;
  return e;
}

namespace {

void print_into(std::ostream& os, const Expr& e);

void print_bindings(std::ostream& os, const std::vector<Binding>& bindings) {
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    if (i) os << ", ";
    os << bindings[i].var << " in ";
    print_into(os, *bindings[i].range);
  }
}

void print_list(std::ostream& os, const std::vector<ExprPtr>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) os << ", ";
    print_into(os, *args[i]);
  }
}

void print_into(std::ostream& os, const Expr& e) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Number: os << to_exact_string(e.number); return;
    case K::Ref:
      os << e.name;
      if (!e.args.empty()) {
        os << "[";
        print_list(os, e.args);
        os << "]";
      }
      if (!e.dep.empty()) os << "^" << e.dep;
      return;
    case K::Neg:
      os << "-(";
      print_into(os, *e.args[0]);
      os << ")";
      return;
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::Div: {
      const char* sym = e.kind == K::Add ? " + " : e.kind == K::Sub ? " - " : e.kind == K::Mul ? " * " : " / ";
      os << "(";
      print_into(os, *e.args[0]);
      os << sym;
      print_into(os, *e.args[1]);
      os << ")";
      return;
    }
    case K::Min:
    case K::Max:
      os << (e.kind == K::Min ? "min(" : "max(");
      print_list(os, e.args);
      os << ")";
      return;
    case K::Sum:
      os << "(sum(";
      print_bindings(os, e.bindings);
      os << ") ";
      print_into(os, *e.args[0]);
      os << ")";
      return;
    case K::Compare:
      os << "(";
      print_into(os, *e.args[0]);
      os << " " << to_string(e.op) << " ";
      print_into(os, *e.args[1]);
      os << ")";
      return;
    case K::Expected:
      os << "expected(";
      print_into(os, *e.args[0]);
      os << ")";
      return;
    case K::RangeLit:
      print_into(os, *e.args[0]);
      os << "..";
      print_into(os, *e.args[1]);
      return;
  }
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::ostringstream os;
  print_into(os, e);
  return os.str();
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size() || a.bindings.size() != b.bindings.size()) {
    return false;
  }
  if (a.kind == Expr::Kind::Number && a.number != b.number) return false;
  if (a.kind == Expr::Kind::Ref && (a.name != b.name || a.dep != b.dep)) return false;
  if (a.kind == Expr::Kind::Compare && a.op != b.op) return false;
  for (std::size_t i = 0; i < a.bindings.size(); ++i) {
    if (a.bindings[i].var != b.bindings[i].var) return false;
    if (!structurally_equal(*a.bindings[i].range, *b.bindings[i].range)) return false;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

std::string IndexRange::label(std::int64_t v) const {
  if (is_enum() && contains(v)) return labels[static_cast<std::size_t>(v - lo)];
  return std::to_string(v);
}

std::optional<std::size_t> Constant::offset(const std::vector<std::int64_t>& index) const {
  if (index.size() != dims.size()) return std::nullopt;
  std::size_t off = 0;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (!dims[d].contains(index[d])) return std::nullopt;
    off = off * static_cast<std::size_t>(dims[d].size()) + static_cast<std::size_t>(index[d] - dims[d].lo);
  }
  return off;
}

std::string to_string(Objective::Kind kind) {
  switch (kind) {
    case Objective::Kind::Expected: return "expected";
    case Objective::Kind::MeanVariance: return "mv";
    case Objective::Kind::Spread: return "spread";
    case Objective::Kind::Downside: return "downside";
    case Objective::Kind::Upside: return "upside";
  }
  return "?";
}

std::string ReductionSpec::describe() const {
  switch (kind) {
    case Kind::Expected: return "expected";
    case Kind::Top: return "top " + std::to_string(count.value_or(0));
    case Kind::Sample: return "sample " + std::to_string(count.value_or(0));
    case Kind::Lhs: return "lhs " + std::to_string(count.value_or(0));
    case Kind::Dgr: return "DGR " + std::to_string(count.value_or(0));
  }
  return "?";
}

std::optional<ReductionSpec> parse_reduction_spec(const std::string& text) {
  std::istringstream is(text);
  std::string word;
  if (!(is >> word)) return std::nullopt;
  std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
  ReductionSpec spec;
  if (word == "expected") {
    spec.kind = ReductionSpec::Kind::Expected;
    std::string rest;
    if (is >> rest) return std::nullopt;
    return spec;
  }
  if (word == "top") {
    spec.kind = ReductionSpec::Kind::Top;
  } else if (word == "sample") {
    spec.kind = ReductionSpec::Kind::Sample;
  } else if (word == "lhs") {
    spec.kind = ReductionSpec::Kind::Lhs;
  } else if (word == "dgr") {
    spec.kind = ReductionSpec::Kind::Dgr;
  } else {
    return std::nullopt;
  }
  long long n = 0;
  if (!(is >> n) || n < 1) return std::nullopt;
  std::string rest;
  if (is >> rest) return std::nullopt;
  spec.count = static_cast<std::size_t>(n);
  return spec;
}

const IndexRange* StochasticModel::find_range(const std::string& name) const {
  for (const auto& r : ranges) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const Constant* StochasticModel::find_constant(const std::string& name) const {
  for (const auto& c : constants) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::optional<std::size_t> StochasticModel::find_decision(const std::string& name) const {
  for (std::size_t i = 0; i < decision_vars.size(); ++i) {
    if (decision_vars[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> StochasticModel::find_stoch(const std::string& name) const {
  for (std::size_t i = 0; i < stoch_vars.size(); ++i) {
    if (stoch_vars[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::int64_t> StochasticModel::find_enum_member(const std::string& name) const {
  for (const auto& r : ranges) {
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
      if (r.labels[i] == name) return r.lo + static_cast<std::int64_t>(i);
    }
  }
  return std::nullopt;
}

std::string to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::DuplicateName: return "duplicate-name";
    case Violation::Kind::UnresolvedName: return "unresolved-name";
    case Violation::Kind::StageIndex: return "stage-index";
    case Violation::Kind::MalformedDistribution: return "malformed-distribution";
    case Violation::Kind::EmptyDomain: return "empty-domain";
    case Violation::Kind::BadThreshold: return "bad-threshold";
    case Violation::Kind::BadObjective: return "bad-objective";
  }
  return "?";
}

bool sums_to_one(const Rational& sum) {
  return std::abs(to_double(sum - 1)) <= kProbabilityTolerance;
}

namespace {

class NameChecker {
 public:
  NameChecker(const StochasticModel& model, std::vector<Violation>& out) : model_(model), out_(out) {}

  void check_binding_range(const Expr& range, std::vector<std::string>& scope) {
    if (range.kind == Expr::Kind::Ref && range.args.empty() && model_.find_range(range.name)) return;
    if (range.kind == Expr::Kind::RangeLit) {
      check(*range.args[0], scope);
      check(*range.args[1], scope);
      return;
    }
    out_.push_back({Violation::Kind::UnresolvedName, "unknown index range '" + print_expr(range) + "'", range.span});
  }

  void check(const Expr& e, std::vector<std::string>& scope) {
    if (e.kind == Expr::Kind::Ref) {
      const bool bound = std::find(scope.begin(), scope.end(), e.name) != scope.end();
      if (!bound && !model_.find_decision(e.name) && !model_.find_stoch(e.name) && !model_.find_constant(e.name) &&
          !model_.find_enum_member(e.name) && !(e.name == "maxint" && e.args.empty())) {
        out_.push_back({Violation::Kind::UnresolvedName, "unresolved name '" + e.name + "'", e.span});
      }
    }
    if (e.kind == Expr::Kind::Sum) {
      const std::size_t mark = scope.size();
      for (const auto& b : e.bindings) {
        check_binding_range(*b.range, scope);
        scope.push_back(b.var);
      }
      check(*e.args[0], scope);
      scope.resize(mark);
      return;
    }
    for (const auto& a : e.args) check(*a, scope);
  }

 private:
  const StochasticModel& model_;
  std::vector<Violation>& out_;
};

void check_distribution(const StochVar& sv, int stages, std::vector<Violation>& out) {
  const auto& groups = sv.distribution.groups;
  if (sv.distribution.kind != Distribution::Kind::Conditional && groups.size() != static_cast<std::size_t>(stages)) {
    out.push_back({Violation::Kind::MalformedDistribution,
                   "stochastic variable '" + sv.name + "' has " + std::to_string(groups.size()) +
                       " stage distributions, expected " + std::to_string(stages),
                   sv.span});
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Rational sum = 0;
    bool positive = !groups[g].empty();
    for (const auto& o : groups[g]) {
      sum += o.prob;
      if (o.prob <= 0) positive = false;
    }
    if (!positive) {
      out.push_back({Violation::Kind::MalformedDistribution,
                     "stochastic variable '" + sv.name + "' group " + std::to_string(g + 1) +
                         " has a non-positive probability",
                     sv.span});
    }
    if (!sums_to_one(sum)) {
      out.push_back({Violation::Kind::MalformedDistribution,
                     "stochastic variable '" + sv.name + "' group " + std::to_string(g + 1) +
                         " probabilities sum to " + to_exact_string(sum),
                     sv.span});
    }
  }
}

}  // namespace

std::vector<Violation> validate(const StochasticModel& model) {
  std::vector<Violation> out;

  std::set<std::string> names;
  auto claim = [&](const std::string& name, Span span) {
    if (!names.insert(name).second) {
      out.push_back({Violation::Kind::DuplicateName, "duplicate declaration of '" + name + "'", span});
    }
  };
  for (const auto& c : model.constants) claim(c.name, c.span);
  for (const auto& v : model.decision_vars) claim(v.name, v.span);
  for (const auto& s : model.stoch_vars) claim(s.name, s.span);

  if (model.stages < 1) {
    out.push_back({Violation::Kind::StageIndex, "stage count must be at least 1", {}});
  }
  for (const auto& sv : model.stoch_vars) {
    if (model.stage_range && sv.stage_range.size() != model.stage_range->size()) {
      out.push_back({Violation::Kind::StageIndex,
                     "stochastic variable '" + sv.name + "' does not use the common stage range", sv.span});
    }
    check_distribution(sv, model.stages, out);
  }
  for (const auto& v : model.decision_vars) {
    if (v.lo > v.hi) {
      out.push_back({Violation::Kind::EmptyDomain, "decision variable '" + v.name + "' has an empty domain", v.span});
    }
    if (v.stage_dim && *v.stage_dim >= v.dims.size()) {
      out.push_back({Violation::Kind::StageIndex, "decision variable '" + v.name + "' has an invalid stage index",
                     v.span});
    }
    if (v.stage_dim && model.stage_range) {
      const auto& d = v.dims[*v.stage_dim];
      if (d.lo < model.stage_range->lo || d.hi > model.stage_range->hi + 1) {
        out.push_back({Violation::Kind::StageIndex,
                       "decision variable '" + v.name + "' stage index leaves 1..m+1", v.span});
      }
    }
  }

  NameChecker checker(model, out);
  for (const auto& c : model.constraints) {
    std::vector<std::string> scope;
    for (const auto& q : c.quantifiers) {
      checker.check_binding_range(*q.range, scope);
      scope.push_back(q.var);
    }
    if (c.body) checker.check(*c.body, scope);
    if (c.kind == ConstraintDecl::Kind::Chance) {
      if (c.threshold < 0 || c.threshold > 1) {
        out.push_back({Violation::Kind::BadThreshold,
                       "chance threshold " + to_exact_string(c.threshold) + " outside [0,1]", c.span});
      }
    }
  }
  if (model.objective.body) {
    std::vector<std::string> scope;
    checker.check(*model.objective.body, scope);
  }
  const bool is_mv = model.objective.kind == Objective::Kind::MeanVariance;
  if (is_mv != model.objective.lambda.has_value()) {
    out.push_back({Violation::Kind::BadObjective, "lambda must be given exactly for mv objectives",
                   model.objective.span});
  }
  if (model.objective.direction != Objective::Direction::Satisfy && !model.objective.body) {
    out.push_back({Violation::Kind::BadObjective, "optimization direction without an objective expression",
                   model.objective.span});
  }
  return out;
}

}  // namespace stochcp
