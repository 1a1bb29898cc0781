#include "stochcp/flat_model.hpp"

#include <algorithm>
#include <sstream>

namespace stochcp {

namespace {

void append_terms(std::ostringstream& os, const DeterministicModel& m, const std::vector<LinTerm>& terms) {
  if (terms.empty()) {
    os << "0";
    return;
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    std::int64_t c = terms[i].coef;
    if (i) {
      os << (c < 0 ? " - " : " + ");
      if (c < 0) c = -c;
    } else if (c < 0) {
      os << "-";
      c = -c;
    }
    if (c != 1) os << c << "*";
    os << m.vars[static_cast<std::size_t>(terms[i].var)].name;
  }
}

}  // namespace

std::vector<int> FlatConstraint::scope() const {
  std::vector<int> out;
  if (z >= 0) out.push_back(z);
  for (const auto& t : terms) out.push_back(t.var);
  out.insert(out.end(), args.begin(), args.end());
  return out;
}

Rational objective_value(const DeterministicModel& model, const std::vector<std::int64_t>& values) {
  Rational total = model.objective_constant;
  for (const auto& [v, c] : model.objective) total += c * values[static_cast<std::size_t>(v)];
  return total;
}

bool satisfied(const FlatConstraint& c, const std::vector<std::int64_t>& values) {
  auto val = [&](int v) { return static_cast<__int128>(values[static_cast<std::size_t>(v)]); };
  auto linear_holds = [&] {
    __int128 sum = 0;
    for (const auto& t : c.terms) sum += static_cast<__int128>(t.coef) * val(t.var);
    switch (c.op) {
      case CmpOp::Eq: return sum == c.rhs;
      case CmpOp::Ne: return sum != c.rhs;
      case CmpOp::Le: return sum <= c.rhs;
      default: return false;
    }
  };
  switch (c.kind) {
    case FlatConstraint::Kind::Linear: return linear_holds();
    case FlatConstraint::Kind::Reified: {
      const auto b = val(c.z);
      return (b == 0 || b == 1) && (b == 1) == linear_holds();
    }
    case FlatConstraint::Kind::Product: return val(c.z) == val(c.args[0]) * val(c.args[1]);
    case FlatConstraint::Kind::Min:
    case FlatConstraint::Kind::Max: {
      __int128 best = val(c.args[0]);
      for (int a : c.args) best = c.kind == FlatConstraint::Kind::Min ? std::min(best, val(a)) : std::max(best, val(a));
      return val(c.z) == best;
    }
  }
  return false;
}

std::string describe(const DeterministicModel& model, const FlatConstraint& c) {
  std::ostringstream os;
  auto name = [&](int v) { return model.vars[static_cast<std::size_t>(v)].name; };
  switch (c.kind) {
    case FlatConstraint::Kind::Linear:
      append_terms(os, model, c.terms);
      os << " " << to_string(c.op) << " " << c.rhs;
      break;
    case FlatConstraint::Kind::Reified:
      os << name(c.z) << " <-> (";
      append_terms(os, model, c.terms);
      os << " " << to_string(c.op) << " " << c.rhs << ")";
      break;
    case FlatConstraint::Kind::Product: os << name(c.z) << " = " << name(c.args[0]) << " * " << name(c.args[1]); break;
    case FlatConstraint::Kind::Min:
    case FlatConstraint::Kind::Max:
      os << name(c.z) << " = " << (c.kind == FlatConstraint::Kind::Min ? "min(" : "max(");
      for (std::size_t i = 0; i < c.args.size(); ++i) os << (i ? ", " : "") << name(c.args[i]);
      os << ")";
      break;
  }
  return os.str();
}

}  // namespace stochcp
