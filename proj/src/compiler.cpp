#include "stochcp/compiler.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace stochcp {

namespace {

constexpr __int128 kDomainLimit = static_cast<__int128>(1) << 62;

struct Lin {
  std::map<int, Rational> terms;
  Rational constant = 0;

  bool is_const() const { return terms.empty(); }

  void add(const Lin& o, const Rational& k = 1) {
    if (k == 0) return;
    for (const auto& [v, c] : o.terms) {
      auto& slot = terms[v];
      slot += c * k;
      if (slot == 0) terms.erase(v);
    }
    constant += o.constant * k;
  }
  void scale(const Rational& k) {
    if (k == 0) {
      terms.clear();
      constant = 0;
      return;
    }
    for (auto& [v, c] : terms) c *= k;
    constant *= k;
  }
  static Lin of_const(Rational c) {
    Lin l;
    l.constant = std::move(c);
    return l;
  }
  static Lin of_var(int v, Rational k = 1) {
    Lin l;
    if (k != 0) l.terms[v] = std::move(k);
    return l;
  }
};

struct IntLin {
  std::vector<LinTerm> terms;  // sorted, nonzero
  std::int64_t constant = 0;
};

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& k) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto x : k) {
      h ^= static_cast<std::uint64_t>(x);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  a = a < 0 ? -a : a;
  b = b < 0 ? -b : b;
  while (b) {
    const std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Result of normalizing `sum(terms) op rhs`.
struct NormLinear {
  enum class Truth { Open, True, False };
  Truth truth = Truth::Open;
  std::vector<LinTerm> terms;
  CmpOp op = CmpOp::Le;
  std::int64_t rhs = 0;
};

NormLinear normalize(std::vector<LinTerm> terms, CmpOp op, std::int64_t rhs) {
  NormLinear n;
  auto negate_all = [&] {
    for (auto& t : terms) t.coef = -t.coef;
    rhs = -rhs;
  };
  switch (op) {
    case CmpOp::Ge:
      negate_all();
      op = CmpOp::Le;
      break;
    case CmpOp::Gt:
      negate_all();
      op = CmpOp::Le;
      rhs -= 1;
      break;
    case CmpOp::Lt:
      op = CmpOp::Le;
      rhs -= 1;
      break;
    default: break;
  }
  if (terms.empty()) {
    bool holds = false;
    switch (op) {
      case CmpOp::Le: holds = 0 <= rhs; break;
      case CmpOp::Eq: holds = rhs == 0; break;
      case CmpOp::Ne: holds = rhs != 0; break;
      default: break;
    }
    n.truth = holds ? NormLinear::Truth::True : NormLinear::Truth::False;
    return n;
  }
  if ((op == CmpOp::Eq || op == CmpOp::Ne) && terms.front().coef < 0) negate_all();
  std::int64_t g = 0;
  for (const auto& t : terms) g = gcd64(g, t.coef);
  if (g > 1) {
    if (op == CmpOp::Le) {
      rhs = floor_div(rhs, g);
    } else if (rhs % g != 0) {
      n.truth = op == CmpOp::Eq ? NormLinear::Truth::False : NormLinear::Truth::True;
      return n;
    } else {
      rhs /= g;
    }
    for (auto& t : terms) t.coef /= g;
  }
  n.terms = std::move(terms);
  n.op = op;
  n.rhs = rhs;
  return n;
}

std::string join_index(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ",";
    out += parts[i];
  }
  return out;
}

class Compiler {
 public:
  Compiler(const StochasticModel& model, const ScenarioTree& tree) : m_(model), tree_(tree) {
    if (tree.var_count() != model.stoch_vars.size()) {
      throw ModelError("compile-error", "scenario tree does not match the model's stochastic variables");
    }
    if (!model.stoch_vars.empty() && tree.stages() != model.stages) {
      throw ModelError("compile-error", "scenario tree stage count does not match the model");
    }
    for (std::size_t i = 0; i < model.constants.size(); ++i) constants_[model.constants[i].name] = i;
    for (std::size_t i = 0; i < model.decision_vars.size(); ++i) decisions_[model.decision_vars[i].name] = i;
    for (std::size_t i = 0; i < model.stoch_vars.size(); ++i) stochs_[model.stoch_vars[i].name] = i;
    for (const auto& r : model.ranges) {
      ranges_[r.name] = &r;
      for (std::size_t k = 0; k < r.labels.size(); ++k) members_[r.labels[k]] = r.lo + static_cast<std::int64_t>(k);
    }
  }

  CompiledModel run() {
    out_.nb_nodes = tree_.nb_nodes();
    out_.scenario_count = tree_.leaf_count();
    for (std::size_t ci = 0; ci < m_.constraints.size(); ++ci) {
      const auto& c = m_.constraints[ci];
      Ctx base;
      for_each_binding(c.quantifiers, 0, base, [&](Ctx& ctx) {
        const std::string origin = "line " + std::to_string(c.span.line) + describe_locals(c.quantifiers, ctx);
        if (c.kind == ConstraintDecl::Kind::Hard) {
          compile_hard(c, ctx, origin);
        } else {
          compile_chance(c, ctx, origin);
        }
      });
    }
    compile_objective();
    for (const auto& [key, var] : out_.index.entries()) {
      const auto& dv = m_.decision_vars[key.decision];
      const bool stage1 = key.node >= 0 && tree_.node(key.node).stage == 1;
      if (dv.robust || stage1) out_.first_stage.push_back({out_.flat.vars[static_cast<std::size_t>(var)].name, var});
    }
    std::sort(out_.first_stage.begin(), out_.first_stage.end(),
              [](const Commitment& a, const Commitment& b) { return a.var < b.var; });
    return std::move(out_);
  }

 private:
  struct Ctx {
    std::map<std::string, std::int64_t> locals;
    std::size_t leaf = 0;
    int max_stage = 1;
    bool leaf_level = false;
    std::string where;
  };

  [[noreturn]] void fail(const Expr& e, const std::string& message) const {
    throw ModelError("compile-error", message, e.span);
  }

  std::string describe_locals(const std::vector<Binding>& bindings, const Ctx& ctx) const {
    if (bindings.empty()) return "";
    std::string out = " [";
    for (std::size_t i = 0; i < bindings.size(); ++i) {
      if (i) out += ",";
      out += bindings[i].var + "=" + std::to_string(ctx.locals.at(bindings[i].var));
    }
    return out + "]";
  }

  // ---- iteration over index bindings ----

  IndexRange range_of(const Expr& e, Ctx& ctx) {
    if (e.kind == Expr::Kind::RangeLit) {
      IndexRange r;
      r.lo = const_int(*e.args[0], ctx);
      r.hi = const_int(*e.args[1], ctx);
      return r;
    }
    if (e.kind == Expr::Kind::Ref && e.args.empty()) {
      auto it = ranges_.find(e.name);
      if (it != ranges_.end()) return *it->second;
    }
    fail(e, "unknown index range '" + print_expr(e) + "'");
  }

  void for_each_binding(const std::vector<Binding>& bindings, std::size_t k, Ctx& ctx,
                        const std::function<void(Ctx&)>& body) {
    if (k == bindings.size()) return body(ctx);
    const IndexRange r = range_of(*bindings[k].range, ctx);
    const auto saved = ctx.locals.find(bindings[k].var) != ctx.locals.end()
                           ? std::optional<std::int64_t>(ctx.locals[bindings[k].var])
                           : std::nullopt;
    for (std::int64_t v = r.lo; v <= r.hi; ++v) {
      ctx.locals[bindings[k].var] = v;
      for_each_binding(bindings, k + 1, ctx, body);
    }
    if (saved) {
      ctx.locals[bindings[k].var] = *saved;
    } else {
      ctx.locals.erase(bindings[k].var);
    }
  }

  std::int64_t const_int(const Expr& e, Ctx& ctx) {
    const Lin l = lin(e, ctx);
    if (!l.is_const()) fail(e, "index expression '" + print_expr(e) + "' must not depend on decision variables");
    if (!is_integer(l.constant)) fail(e, "index expression '" + print_expr(e) + "' is not an integer");
    return to_int64(numerator_of(l.constant));
  }

  // ---- expressions to linear forms ----

  Lin lin(const Expr& e, Ctx& ctx) {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::Number: return Lin::of_const(e.number);
      case K::Ref: return ref(e, ctx);
      case K::Neg: {
        Lin l = lin(*e.args[0], ctx);
        l.scale(-1);
        return l;
      }
      case K::Add:
      case K::Sub: {
        Lin l = lin(*e.args[0], ctx);
        l.add(lin(*e.args[1], ctx), e.kind == K::Add ? 1 : -1);
        return l;
      }
      case K::Mul: {
        Lin a = lin(*e.args[0], ctx);
        Lin b = lin(*e.args[1], ctx);
        if (a.is_const()) {
          b.scale(a.constant);
          return b;
        }
        if (b.is_const()) {
          a.scale(b.constant);
          return a;
        }
        return product(a, b);
      }
      case K::Div: {
        Lin a = lin(*e.args[0], ctx);
        const Lin b = lin(*e.args[1], ctx);
        if (!b.is_const()) fail(e, "division by a decision-dependent expression is not supported");
        if (b.constant == 0) fail(e, "division by zero");
        a.scale(1 / b.constant);
        return a;
      }
      case K::Min:
      case K::Max: {
        std::vector<Lin> args;
        for (const auto& a : e.args) args.push_back(lin(*a, ctx));
        return min_max(args, e.kind == K::Max);
      }
      case K::Sum: {
        Lin total;
        for_each_binding(e.bindings, 0, ctx, [&](Ctx& inner) { total.add(lin(*e.args[0], inner)); });
        return total;
      }
      case K::Compare: {
        Lin d = lin(*e.args[0], ctx);
        d.add(lin(*e.args[1], ctx), -1);
        return Lin::of_var(reify(d, e.op));
      }
      case K::Expected: fail(e, "expected(...) is only allowed as the objective");
      case K::RangeLit: fail(e, "a range is not a value");
    }
    fail(e, "unsupported expression");
  }

  std::vector<std::int64_t> indices(const Expr& e, Ctx& ctx) {
    std::vector<std::int64_t> idx;
    for (const auto& a : e.args) idx.push_back(const_int(*a, ctx));
    return idx;
  }

  Lin ref(const Expr& e, Ctx& ctx) {
    if (e.args.empty()) {
      if (auto it = ctx.locals.find(e.name); it != ctx.locals.end()) return Lin::of_const(it->second);
      if (e.name == "maxint") return Lin::of_const(m_.maxint);
    }
    if (auto it = decisions_.find(e.name); it != decisions_.end()) {
      return Lin::of_var(decision_var(it->second, indices(e, ctx), ctx, e));
    }
    if (auto it = stochs_.find(e.name); it != stochs_.end()) {
      const auto& sv = m_.stoch_vars[it->second];
      const auto idx = indices(e, ctx);
      if (idx.size() != 1 || !sv.stage_range.contains(idx[0])) {
        fail(e, "stage index out of range for stochastic variable '" + e.name + "'");
      }
      const int stage = static_cast<int>(idx[0] - sv.stage_range.lo) + 1;
      const int node = tree_.node_at(stage + 1, ctx.leaf);
      ctx.max_stage = std::max(ctx.max_stage, stage + 1);
      return Lin::of_const(tree_.node(node).values[it->second]);
    }
    if (auto it = constants_.find(e.name); it != constants_.end()) {
      const Constant& c = m_.constants[it->second];
      if (!e.dep.empty() && (!c.depends_on || m_.stoch_vars[*c.depends_on].name != e.dep)) {
        fail(e, "'" + e.name + "' does not depend on '" + e.dep + "'");
      }
      const auto idx = indices(e, ctx);
      const auto off = c.offset(idx);
      if (!off) fail(e, "index out of range for '" + e.name + "'");
      if (!c.depends_on) return Lin::of_const(c.values[*off]);
      const auto& sv = m_.stoch_vars[*c.depends_on];
      const int stage = static_cast<int>(idx[*c.stage_dim] - sv.stage_range.lo) + 1;
      if (stage < 1 || stage > tree_.stages()) fail(e, "stage index out of range for '" + e.name + "'");
      const int node = tree_.node_at(stage + 1, ctx.leaf);
      ctx.max_stage = std::max(ctx.max_stage, stage + 1);
      const auto& cell = c.outcome_values[*off];
      if (cell.size() == 1) return Lin::of_const(cell[0]);
      Rational value = 0;
      for (const auto& r : tree_.node(node).outcomes[*c.depends_on]) {
        if (r.outcome >= cell.size()) {
          throw ModelError("shape-mismatch",
                           "'" + e.name + "' lists " + std::to_string(cell.size()) + " outcome values but '" +
                               sv.name + "' has more outcomes at stage " + std::to_string(stage),
                           e.span);
        }
        value += r.weight * cell[r.outcome];
      }
      return Lin::of_const(value);
    }
    if (e.args.empty()) {
      if (auto it = members_.find(e.name); it != members_.end()) return Lin::of_const(it->second);
    }
    fail(e, "unresolved name '" + e.name + "'");
  }

  std::string index_label(const DecisionVar& dv, std::size_t d, std::int64_t v) const {
    return dv.dims[d].label(v);
  }

  int decision_var(std::size_t k, const std::vector<std::int64_t>& idx, Ctx& ctx, const Expr& e) {
    const DecisionVar& dv = m_.decision_vars[k];
    if (idx.size() != dv.dims.size()) {
      fail(e, "'" + dv.name + "' expects " + std::to_string(dv.dims.size()) + " indices");
    }
    for (std::size_t d = 0; d < idx.size(); ++d) {
      if (!dv.dims[d].contains(idx[d])) fail(e, "index out of range for '" + dv.name + "'");
    }
    FlatVarKey key;
    key.decision = k;
    key.indices = idx;
    int priority = 0;
    std::vector<std::string> parts;
    for (std::size_t d = 0; d < idx.size(); ++d) parts.push_back(index_label(dv, d, idx[d]));
    if (dv.robust) {
      if (dv.stage_dim) priority = static_cast<int>(idx[*dv.stage_dim] - m_.stage_range->lo) + 1;
    } else if (dv.stage_dim) {
      const int stage = static_cast<int>(idx[*dv.stage_dim] - m_.stage_range->lo) + 1;
      if (stage < 1 || stage > tree_.stages() + 1) fail(e, "stage index out of range for '" + dv.name + "'");
      key.node = tree_.node_at(stage, ctx.leaf);
      ctx.max_stage = std::max(ctx.max_stage, stage);
      priority = stage;
      parts[*dv.stage_dim] =
          "<" + std::to_string(idx[*dv.stage_dim]) + "," + std::to_string(tree_.node(key.node).state + 1) + ">";
    } else {
      key.leaf = static_cast<int>(ctx.leaf);
      ctx.leaf_level = true;
      priority = tree_.stages() + 1;
      if (tree_.leaf_count() > 1) parts.push_back("@" + std::to_string(ctx.leaf + 1));
    }
    if (auto found = out_.index.find(key)) return *found;
    FlatVar fv;
    fv.name = parts.empty() ? dv.name : dv.name + "[" + join_index(parts) + "]";
    fv.lo = dv.lo;
    fv.hi = dv.hi;
    fv.priority = priority;
    const int id = add_var(std::move(fv));
    out_.index.add(key, id);
    return id;
  }

  int add_var(FlatVar v) {
    out_.flat.vars.push_back(std::move(v));
    return static_cast<int>(out_.flat.vars.size()) - 1;
  }

  // ---- auxiliary variables ----

  /// Scales to integer coefficients; returns the multiplier used.
  IntLin integerize(const Lin& l, Rational* multiplier = nullptr) {
    BigInt den = denominator_of(l.constant);
    for (const auto& [v, c] : l.terms) den = lcm(den, denominator_of(c));
    IntLin out;
    try {
      for (const auto& [v, c] : l.terms) out.terms.push_back({v, to_int64(numerator_of(c * den))});
      out.constant = to_int64(numerator_of(l.constant * den));
    } catch (const std::overflow_error&) {
      throw ModelError("overflow", "coefficient exceeds the 64-bit range after scaling");
    }
    if (multiplier) *multiplier = Rational(den);
    return out;
  }

  std::pair<__int128, __int128> bounds(const std::vector<LinTerm>& terms, std::int64_t constant) const {
    __int128 lo = constant;
    __int128 hi = constant;
    for (const auto& t : terms) {
      const auto& v = out_.flat.vars[static_cast<std::size_t>(t.var)];
      const __int128 a = static_cast<__int128>(t.coef) * v.lo;
      const __int128 b = static_cast<__int128>(t.coef) * v.hi;
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    return {lo, hi};
  }

  int new_aux(const std::string& name, __int128 lo, __int128 hi, int priority) {
    if (lo < -kDomainLimit || hi > kDomainLimit) {
      throw ModelError("overflow", "auxiliary variable " + name + " exceeds the 64-bit domain limit; tighten bounds");
    }
    FlatVar v;
    v.name = name;
    v.lo = static_cast<std::int64_t>(lo);
    v.hi = static_cast<std::int64_t>(hi);
    v.priority = priority;
    v.aux = true;
    return add_var(std::move(v));
  }

  int priority_of(const std::vector<int>& vars) const {
    int p = 0;
    for (int v : vars) p = std::max(p, out_.flat.vars[static_cast<std::size_t>(v)].priority);
    return p;
  }

  int const_var(std::int64_t value) {
    std::vector<std::int64_t> key{0, value};
    if (auto it = aux_.find(key); it != aux_.end()) return it->second;
    const int v = new_aux("_k" + std::to_string(value), value, value, 0);
    aux_.emplace(std::move(key), v);
    return v;
  }

  /// A variable equal to the integer linear form.
  int exact_var(const IntLin& l) {
    if (l.terms.empty()) return const_var(l.constant);
    if (l.terms.size() == 1 && l.terms[0].coef == 1 && l.constant == 0) return l.terms[0].var;
    std::vector<std::int64_t> key{1, l.constant};
    for (const auto& t : l.terms) {
      key.push_back(t.var);
      key.push_back(t.coef);
    }
    if (auto it = aux_.find(key); it != aux_.end()) return it->second;
    const auto [lo, hi] = bounds(l.terms, l.constant);
    std::vector<int> ops;
    for (const auto& t : l.terms) ops.push_back(t.var);
    const int z = new_aux("_e" + std::to_string(aux_count_++), lo, hi, priority_of(ops));
    // z - sum = constant
    std::vector<LinTerm> terms{{z, 1}};
    for (const auto& t : l.terms) terms.push_back({t.var, -t.coef});
    std::sort(terms.begin(), terms.end(), [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
    add_linear(terms, CmpOp::Eq, l.constant, "definition of " + out_.flat.vars[static_cast<std::size_t>(z)].name);
    aux_.emplace(std::move(key), z);
    return z;
  }

  /// (v, k) with v = k * l.
  std::pair<int, Rational> scaled_var(const Lin& l) {
    if (l.terms.size() == 1 && l.constant == 0) {
      const auto& [v, c] = *l.terms.begin();
      return {v, 1 / c};
    }
    Rational k;
    const IntLin il = integerize(l, &k);
    return {exact_var(il), k};
  }

  Lin product(const Lin& a, const Lin& b) {
    const auto [x, kx] = scaled_var(a);
    const auto [y, ky] = scaled_var(b);
    const int lo_v = std::min(x, y);
    const int hi_v = std::max(x, y);
    std::vector<std::int64_t> key{2, lo_v, hi_v};
    int z = -1;
    if (auto it = aux_.find(key); it != aux_.end()) {
      z = it->second;
    } else {
      const auto& vx = out_.flat.vars[static_cast<std::size_t>(lo_v)];
      const auto& vy = out_.flat.vars[static_cast<std::size_t>(hi_v)];
      const __int128 c[4] = {static_cast<__int128>(vx.lo) * vy.lo, static_cast<__int128>(vx.lo) * vy.hi,
                             static_cast<__int128>(vx.hi) * vy.lo, static_cast<__int128>(vx.hi) * vy.hi};
      z = new_aux("_p" + std::to_string(aux_count_++), *std::min_element(c, c + 4), *std::max_element(c, c + 4),
                  priority_of({lo_v, hi_v}));
      FlatConstraint fc;
      fc.kind = FlatConstraint::Kind::Product;
      fc.z = z;
      fc.args = {lo_v, hi_v};
      fc.origin = "definition of " + out_.flat.vars[static_cast<std::size_t>(z)].name;
      add_constraint(std::move(fc));
      aux_.emplace(std::move(key), z);
    }
    return Lin::of_var(z, 1 / (kx * ky));
  }

  Lin min_max(const std::vector<Lin>& args, bool is_max) {
    BigInt den = 1;
    for (const auto& a : args) {
      den = lcm(den, denominator_of(a.constant));
      for (const auto& [v, c] : a.terms) den = lcm(den, denominator_of(c));
    }
    if (std::all_of(args.begin(), args.end(), [](const Lin& a) { return a.is_const(); })) {
      Rational best = args[0].constant;
      for (const auto& a : args) best = is_max ? std::max(best, a.constant) : std::min(best, a.constant);
      return Lin::of_const(best);
    }
    std::vector<int> vars;
    for (const auto& a : args) {
      Lin scaled = a;
      scaled.scale(Rational(den));
      vars.push_back(exact_var(integerize(scaled)));
    }
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    if (vars.size() == 1) return Lin::of_var(vars[0], 1 / Rational(den));
    std::vector<std::int64_t> key{is_max ? 4 : 3};
    key.insert(key.end(), vars.begin(), vars.end());
    int z = -1;
    if (auto it = aux_.find(key); it != aux_.end()) {
      z = it->second;
    } else {
      __int128 lo = 0;
      __int128 hi = 0;
      bool first = true;
      for (int v : vars) {
        const auto& fv = out_.flat.vars[static_cast<std::size_t>(v)];
        if (first) {
          lo = fv.lo;
          hi = fv.hi;
          first = false;
        } else if (is_max) {
          lo = std::max<__int128>(lo, fv.lo);
          hi = std::max<__int128>(hi, fv.hi);
        } else {
          lo = std::min<__int128>(lo, fv.lo);
          hi = std::min<__int128>(hi, fv.hi);
        }
      }
      z = new_aux((is_max ? "_max" : "_min") + std::to_string(aux_count_++), lo, hi, priority_of(vars));
      FlatConstraint fc;
      fc.kind = is_max ? FlatConstraint::Kind::Max : FlatConstraint::Kind::Min;
      fc.z = z;
      fc.args = vars;
      fc.origin = "definition of " + out_.flat.vars[static_cast<std::size_t>(z)].name;
      add_constraint(std::move(fc));
      aux_.emplace(std::move(key), z);
    }
    return Lin::of_var(z, 1 / Rational(den));
  }

  /// 0/1 variable b with b <-> (d op 0).
  int reify(const Lin& d, CmpOp op) {
    const IntLin il = integerize(d);
    NormLinear n = normalize(il.terms, op, -il.constant);
    if (n.truth != NormLinear::Truth::Open) return const_var(n.truth == NormLinear::Truth::True ? 1 : 0);
    std::vector<std::int64_t> key{5, static_cast<std::int64_t>(n.op), n.rhs};
    std::vector<int> ops;
    for (const auto& t : n.terms) {
      key.push_back(t.var);
      key.push_back(t.coef);
      ops.push_back(t.var);
    }
    if (auto it = aux_.find(key); it != aux_.end()) return it->second;
    const int b = new_aux("_b" + std::to_string(aux_count_++), 0, 1, priority_of(ops));
    FlatConstraint fc;
    fc.kind = FlatConstraint::Kind::Reified;
    fc.z = b;
    fc.terms = std::move(n.terms);
    fc.op = n.op;
    fc.rhs = n.rhs;
    fc.origin = "definition of " + out_.flat.vars[static_cast<std::size_t>(b)].name;
    add_constraint(std::move(fc));
    aux_.emplace(std::move(key), b);
    return b;
  }

  // ---- constraints ----

  void add_constraint(FlatConstraint c) {
    std::vector<std::int64_t> key{static_cast<std::int64_t>(c.kind), static_cast<std::int64_t>(c.op), c.rhs, c.z};
    for (const auto& t : c.terms) {
      key.push_back(t.var);
      key.push_back(t.coef);
    }
    key.push_back(-1);
    key.insert(key.end(), c.args.begin(), c.args.end());
    if (!seen_.insert(std::move(key)).second) return;
    out_.flat.constraints.push_back(std::move(c));
  }

  void add_linear(const std::vector<LinTerm>& terms, CmpOp op, std::int64_t rhs, const std::string& origin) {
    NormLinear n = normalize(terms, op, rhs);
    if (n.truth == NormLinear::Truth::True) return;
    FlatConstraint c;
    c.kind = FlatConstraint::Kind::Linear;
    c.origin = origin;
    if (n.truth == NormLinear::Truth::False) {
      c.op = CmpOp::Le;
      c.rhs = -1;
    } else {
      c.terms = std::move(n.terms);
      c.op = n.op;
      c.rhs = n.rhs;
    }
    add_constraint(std::move(c));
  }

  void add_lin_constraint(const Lin& d, CmpOp op, const std::string& origin) {
    const IntLin il = integerize(d);
    add_linear(il.terms, op, -il.constant, origin);
  }

  void compile_hard(const ConstraintDecl& c, Ctx& ctx, const std::string& origin) {
    const Expr& body = *c.body;
    for (std::size_t s = 0; s < tree_.leaf_count(); ++s) {
      ctx.leaf = s;
      Lin d = lin(*body.args[0], ctx);
      d.add(lin(*body.args[1], ctx), -1);
      add_lin_constraint(d, body.op, origin);
    }
  }

  void compile_chance(const ConstraintDecl& c, Ctx& ctx, const std::string& origin) {
    // Probability mass per distinct reified instance; instances that share a
    // node share the variable, so this equals the node-set sum.
    std::map<int, Rational> mass;
    Rational fixed = 0;
    for (std::size_t s = 0; s < tree_.leaf_count(); ++s) {
      ctx.leaf = s;
      Lin d = lin(*c.body->args[0], ctx);
      d.add(lin(*c.body->args[1], ctx), -1);
      const int b = reify(d, c.body->op);
      const Rational p = tree_.node(tree_.leaf_node(s)).node_prob;
      const auto& fv = out_.flat.vars[static_cast<std::size_t>(b)];
      if (fv.lo == fv.hi) {
        fixed += p * fv.lo;
      } else {
        mass[b] += p;
      }
    }
    Lin sum = Lin::of_const(fixed - c.threshold);
    for (const auto& [b, p] : mass) sum.add(Lin::of_var(b, p));
    add_lin_constraint(sum, c.threshold_op, origin + " chance");
  }

  // ---- objective ----

  void compile_objective() {
    const Objective& o = m_.objective;
    auto& flat = out_.flat;
    flat.direction = o.direction;
    if (o.direction == Objective::Direction::Satisfy || !o.body) return;
    const bool minimize = o.direction == Objective::Direction::Minimize;

    std::vector<Lin> per_leaf;
    std::vector<Rational> probs;
    for (std::size_t s = 0; s < tree_.leaf_count(); ++s) {
      Ctx ctx;
      ctx.leaf = s;
      per_leaf.push_back(lin(*o.body, ctx));
      probs.push_back(tree_.node(tree_.leaf_node(s)).node_prob);
    }

    Lin objective;
    if (o.kind == Objective::Kind::Expected) {
      for (std::size_t s = 0; s < per_leaf.size(); ++s) objective.add(per_leaf[s], probs[s]);
      set_objective(objective);
      return;
    }

    // Integer per-leaf values Qv[s] = scale * Q[s].
    BigInt den = 1;
    for (const auto& l : per_leaf) {
      den = lcm(den, denominator_of(l.constant));
      for (const auto& [v, c] : l.terms) den = lcm(den, denominator_of(c));
    }
    const Rational scale(den);
    std::vector<int> q;
    for (const auto& l : per_leaf) {
      Lin scaled = l;
      scaled.scale(scale);
      q.push_back(exact_var(integerize(scaled)));
    }
    __int128 qlo = 0;
    __int128 qhi = 0;
    for (std::size_t s = 0; s < q.size(); ++s) {
      const auto& v = flat.vars[static_cast<std::size_t>(q[s])];
      qlo = s == 0 ? v.lo : std::min<__int128>(qlo, v.lo);
      qhi = s == 0 ? v.hi : std::max<__int128>(qhi, v.hi);
    }
    const int leaf_priority = tree_.stages() + 1;

    switch (o.kind) {
      case Objective::Kind::MeanVariance: {
        if (!o.lambda) throw ModelError("bad-objective", "mv objective without lambda", o.span);
        if (minimize && *o.lambda < 0) {
          throw ModelError("bad-objective", "mv with minimize expects lambda >= 0 (got " + to_exact_string(*o.lambda) + ")",
                           o.span);
        }
        const Rational lambda = *o.lambda < 0 ? Rational(-*o.lambda) : *o.lambda;
        BigInt pden = 1;
        for (const auto& p : probs) pden = lcm(pden, denominator_of(p));
        // mean = sum(w[s] * Qv[s]) = P * L * E{Q}
        std::vector<LinTerm> mean_terms;
        for (std::size_t s = 0; s < q.size(); ++s) {
          const std::int64_t w = to_int64(numerator_of(probs[s] * Rational(pden)));
          mean_terms.push_back({q[s], w});
        }
        std::map<int, std::int64_t> merged;
        for (const auto& t : mean_terms) merged[t.var] += t.coef;
        IntLin mean_lin;
        for (const auto& [v, c] : merged) {
          if (c != 0) mean_lin.terms.push_back({v, c});
        }
        const int mean = exact_var(mean_lin);
        const std::int64_t P = to_int64(pden);
        const __int128 span = (qhi - qlo) * static_cast<__int128>(P);
        for (std::size_t s = 0; s < q.size(); ++s) {
          // K[s] >= |P * Qv[s] - mean|
          const int k = new_aux("_K[@" + std::to_string(s + 1) + "]", 0, span, leaf_priority);
          std::vector<LinTerm> up{{q[s], P}, {mean, -1}, {k, -1}};
          std::vector<LinTerm> down{{q[s], -P}, {mean, 1}, {k, -1}};
          if (q[s] == mean) {
            up = {{k, -1}};
            down = {{k, -1}};
          }
          auto sorted = [](std::vector<LinTerm> t) {
            std::map<int, std::int64_t> acc;
            for (const auto& x : t) acc[x.var] += x.coef;
            std::vector<LinTerm> out;
            for (const auto& [v, c] : acc) {
              if (c != 0) out.push_back({v, c});
            }
            return out;
          };
          add_linear(sorted(up), CmpOp::Le, 0, "mv deviation @" + std::to_string(s + 1));
          add_linear(sorted(down), CmpOp::Le, 0, "mv deviation @" + std::to_string(s + 1));
          const Rational risk = lambda * probs[s] / (Rational(pden) * scale);
          objective.add(Lin::of_var(k, minimize ? risk : Rational(-risk)));
        }
        for (std::size_t s = 0; s < per_leaf.size(); ++s) objective.add(per_leaf[s], probs[s]);
        break;
      }
      case Objective::Kind::Spread:
      case Objective::Kind::Downside:
      case Objective::Kind::Upside: {
        const bool want_hi = o.kind != Objective::Kind::Downside;
        const bool want_lo = o.kind != Objective::Kind::Upside;
        // Bounding variables work when the direction pushes them onto the extreme.
        const bool bounding = o.kind == Objective::Kind::Downside ? !minimize : minimize;
        int hi_var = -1;
        int lo_var = -1;
        if (bounding) {
          if (want_hi) hi_var = new_aux("_upper", qlo, qhi, leaf_priority);
          if (want_lo) lo_var = new_aux("_lower", qlo, qhi, leaf_priority);
          for (int qs : q) {
            if (hi_var >= 0) add_linear(ordered({{qs, 1}, {hi_var, -1}}), CmpOp::Le, 0, "upper bound");
            if (lo_var >= 0) add_linear(ordered({{lo_var, 1}, {qs, -1}}), CmpOp::Le, 0, "lower bound");
          }
        } else {
          std::vector<Lin> leaves;
          for (int qs : q) leaves.push_back(Lin::of_var(qs));
          if (want_hi) hi_var = min_max(leaves, true).terms.begin()->first;
          if (want_lo) lo_var = min_max(leaves, false).terms.begin()->first;
        }
        if (hi_var >= 0) objective.add(Lin::of_var(hi_var, 1 / scale));
        if (lo_var >= 0) objective.add(Lin::of_var(lo_var, o.kind == Objective::Kind::Spread ? Rational(-1 / scale)
                                                                                            : Rational(1 / scale)));
        break;
      }
      case Objective::Kind::Expected: break;
    }
    set_objective(objective);
  }

  static std::vector<LinTerm> ordered(std::vector<LinTerm> t) {
    std::sort(t.begin(), t.end(), [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
    std::vector<LinTerm> out;
    for (const auto& x : t) {
      if (!out.empty() && out.back().var == x.var) {
        out.back().coef += x.coef;
      } else {
        out.push_back(x);
      }
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const LinTerm& x) { return x.coef == 0; }), out.end());
    return out;
  }

  void set_objective(const Lin& l) {
    out_.flat.objective.assign(l.terms.begin(), l.terms.end());
    out_.flat.objective_constant = l.constant;
  }

  const StochasticModel& m_;
  const ScenarioTree& tree_;
  CompiledModel out_;
  std::map<std::string, std::size_t> constants_;
  std::map<std::string, std::size_t> decisions_;
  std::map<std::string, std::size_t> stochs_;
  std::map<std::string, const IndexRange*> ranges_;
  std::map<std::string, std::int64_t> members_;
  std::unordered_map<std::vector<std::int64_t>, int, KeyHash> aux_;
  std::set<std::vector<std::int64_t>> seen_;
  int aux_count_ = 0;
};

std::string coef_text(const Rational& c) { return to_exact_string(c); }

}  // namespace

std::optional<int> NodeIndexMap::find(const FlatVarKey& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

CompiledModel compile(const StochasticModel& model, const ScenarioTree& tree) { return Compiler(model, tree).run(); }

std::string emit_flat(const CompiledModel& compiled) {
  const auto& m = compiled.flat;
  std::ostringstream os;
  os << "// certainty-equivalent model\n";
  os << "scenarios = " << compiled.scenario_count << ";\n";
  os << "nbNodes = [";
  for (std::size_t i = 0; i < compiled.nb_nodes.size(); ++i) os << (i ? ", " : "") << compiled.nb_nodes[i];
  os << "];\n";
  for (const auto& v : m.vars) os << "var int " << v.name << " in " << v.lo << ".." << v.hi << ";\n";
  switch (m.direction) {
    case Objective::Direction::Minimize: os << "minimize "; break;
    case Objective::Direction::Maximize: os << "maximize "; break;
    case Objective::Direction::Satisfy: os << "satisfy"; break;
  }
  if (m.direction != Objective::Direction::Satisfy) {
    bool first = true;
    for (const auto& [v, c] : m.objective) {
      Rational k = c;
      if (!first) {
        os << (k < 0 ? " - " : " + ");
        if (k < 0) k = -k;
      } else if (k < 0) {
        os << "-";
        k = -k;
      }
      first = false;
      if (k != 1) os << coef_text(k) << "*";
      os << m.vars[static_cast<std::size_t>(v)].name;
    }
    if (m.objective_constant != 0 || first) {
      if (!first) os << (m.objective_constant < 0 ? " - " : " + ");
      os << coef_text(first || m.objective_constant >= 0 ? m.objective_constant : Rational(-m.objective_constant));
    }
  }
  os << "\nsubject to {\n";
  for (const auto& c : m.constraints) os << "  " << describe(m, c) << ";\n";
  os << "};\n";
  return os.str();
}

std::uint64_t flat_hash(const CompiledModel& compiled) {
  const std::string text = emit_flat(compiled);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::optional<int> flat_var_for(const StochasticModel& model, const ScenarioTree& tree, const CompiledModel& compiled,
                                const std::string& name, const std::vector<std::int64_t>& indices, std::size_t leaf) {
  auto k = model.find_decision(name);
  if (!k) return std::nullopt;
  const auto& dv = model.decision_vars[*k];
  FlatVarKey key;
  key.decision = *k;
  key.indices = indices;
  if (!dv.robust) {
    if (dv.stage_dim) {
      const int stage = static_cast<int>(indices[*dv.stage_dim] - model.stage_range->lo) + 1;
      key.node = tree.node_at(stage, leaf);
    } else {
      key.leaf = static_cast<int>(leaf);
    }
  }
  return compiled.index.find(key);
}

}  // namespace stochcp
