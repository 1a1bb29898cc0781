#include "stochcp/dsl.hpp"

#include <functional>
#include <map>
#include <set>

namespace stochcp {

namespace {

struct BindError {
  Span span;
  std::string message;
};

class Binder {
 public:
  Binder(const SourceModel& src, const DataBindings& data, const BindOptions& options)
      : src_(src), data_(data), options_(options) {}

  FrontendResult<StochasticModel> run() {
    model_.maxint = options_.maxint;
    for (std::size_t i = 0; i < src_.decls.size(); ++i) {
      const auto& d = src_.decls[i];
      if (!by_name_.emplace(d.name, i).second) {
        error(d.span, "duplicate declaration of '" + d.name + "'");
      }
    }
    for (std::size_t i = 0; i < src_.decls.size(); ++i) guarded([&] { resolve(i); });
    guarded([&] { settle_stages(); });
    for (std::size_t i = 0; i < src_.decls.size(); ++i) {
      if (src_.decls[i].kind == SourceDecl::Kind::Var) guarded([&] { bind_var(src_.decls[i]); });
    }
    for (const auto& [name, span] : src_.robust_names) {
      auto idx = model_.find_decision(name);
      if (!idx) {
        error(span, "robust declaration names unknown decision variable '" + name + "'");
        continue;
      }
      model_.decision_vars[*idx].robust = true;
    }
    for (const auto& c : src_.constraints) guarded([&] { bind_constraint(c); });
    guarded([&] { bind_objective(); });
    model_.scenario_directive = src_.scenario;
    for (const auto& [name, value] : data_.entries) {
      if (!by_name_.count(name)) {
        diags_.push_back({Severity::Warning, value.span, "data binding '" + name + "' is not used by the model"});
      }
    }

    if (!has_error()) {
      for (const auto& v : validate(model_)) {
        diags_.push_back({Severity::Error, v.span, to_string(v.kind) + ": " + v.message});
      }
    }
    FrontendResult<StochasticModel> out;
    out.diagnostics = diags_;
    if (!has_error()) out.value = std::move(model_);
    return out;
  }

 private:
  enum class State { Pending, Active, Done, Failed };

  void error(Span span, std::string message) { diags_.push_back({Severity::Error, span, std::move(message)}); }
  bool has_error() const {
    for (const auto& d : diags_) {
      if (d.severity == Severity::Error) return true;
    }
    return false;
  }
  template <typename F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const BindError& e) {
      error(e.span, e.message);
    }
  }

  // ---- lazy declaration resolution ----

  void resolve(std::size_t i) {
    auto& st = state_[i];
    if (st == State::Done) return;
    const auto& d = src_.decls[i];
    if (st == State::Failed) throw BindError{d.span, "'" + d.name + "' could not be resolved"};
    if (st == State::Active) throw BindError{d.span, "cyclic definition involving '" + d.name + "'"};
    st = State::Active;
    try {
      switch (d.kind) {
        case SourceDecl::Kind::Range: bind_range(d); break;
        case SourceDecl::Kind::Enum: bind_enum(d); break;
        case SourceDecl::Kind::Constant: bind_constant(d); break;
        case SourceDecl::Kind::Stoch: bind_stoch(d); break;
        case SourceDecl::Kind::Var: break;
      }
    } catch (...) {
      st = State::Failed;
      throw;
    }
    st = State::Done;
  }

  const SourceDecl* decl(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &src_.decls[it->second];
  }

  void require(const std::string& name) {
    auto it = by_name_.find(name);
    if (it != by_name_.end()) resolve(it->second);
  }

  const DataValue& external(const SourceDecl& d) {
    const DataValue* v = data_.find(d.name);
    if (!v) throw BindError{d.span, "missing data binding for '" + d.name + "'"};
    return *v;
  }

  // ---- constant evaluation ----

  using Locals = std::map<std::string, std::int64_t>;

  std::optional<std::int64_t> member(const std::string& name) {
    for (const auto& d : src_.decls) {
      if (d.kind != SourceDecl::Kind::Enum) continue;
      resolve(by_name_.at(d.name));
      const IndexRange* r = model_.find_range(d.name);
      for (std::size_t k = 0; r && k < r->labels.size(); ++k) {
        if (r->labels[k] == name) return r->lo + static_cast<std::int64_t>(k);
      }
    }
    return std::nullopt;
  }

  Rational eval(const Expr& e, const Locals& locals) {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::Number: return e.number;
      case K::Neg: return -eval(*e.args[0], locals);
      case K::Add: return eval(*e.args[0], locals) + eval(*e.args[1], locals);
      case K::Sub: return eval(*e.args[0], locals) - eval(*e.args[1], locals);
      case K::Mul: return eval(*e.args[0], locals) * eval(*e.args[1], locals);
      case K::Div: {
        const Rational den = eval(*e.args[1], locals);
        if (den == 0) throw BindError{e.span, "division by zero"};
        return eval(*e.args[0], locals) / den;
      }
      case K::Min:
      case K::Max: {
        Rational best = eval(*e.args[0], locals);
        for (std::size_t i = 1; i < e.args.size(); ++i) {
          const Rational v = eval(*e.args[i], locals);
          if (e.kind == K::Min ? v < best : v > best) best = v;
        }
        return best;
      }
      case K::Sum: {
        Rational total = 0;
        sum_over(e.bindings, 0, locals, [&](const Locals& inner) { total += eval(*e.args[0], inner); });
        return total;
      }
      case K::Compare:
        return compare(eval(*e.args[0], locals), e.op, eval(*e.args[1], locals)) ? 1 : 0;
      case K::Ref: return eval_ref(e, locals);
      case K::Expected:
      case K::RangeLit: break;
    }
    throw BindError{e.span, "expected a constant expression"};
  }

  std::int64_t eval_int(const Expr& e, const Locals& locals) {
    const Rational v = eval(e, locals);
    if (!is_integer(v)) throw BindError{e.span, "expected an integer, got " + to_exact_string(v)};
    try {
      return to_int64(numerator_of(v));
    } catch (const std::overflow_error&) {
      throw BindError{e.span, "integer out of range"};
    }
  }

  void sum_over(const std::vector<Binding>& bindings, std::size_t k, const Locals& locals,
                const std::function<void(const Locals&)>& body) {
    if (k == bindings.size()) return body(locals);
    const IndexRange r = resolve_dim(*bindings[k].range, locals);
    for (std::int64_t v = r.lo; v <= r.hi; ++v) {
      Locals inner = locals;
      inner[bindings[k].var] = v;
      sum_over(bindings, k + 1, inner, body);
    }
  }

  Rational eval_ref(const Expr& e, const Locals& locals) {
    if (e.args.empty()) {
      if (auto it = locals.find(e.name); it != locals.end()) return it->second;
      if (e.name == "maxint") return options_.maxint;
    }
    const SourceDecl* d = decl(e.name);
    if (!d) {
      if (e.args.empty()) {
        if (auto m = member(e.name)) return *m;
      }
      throw BindError{e.span, "unresolved name '" + e.name + "'"};
    }
    if (d->kind != SourceDecl::Kind::Constant) {
      throw BindError{e.span, "'" + e.name + "' is not a constant"};
    }
    require(e.name);
    const Constant* c = model_.find_constant(e.name);
    if (!c) throw BindError{e.span, "'" + e.name + "' could not be resolved"};
    if (c->depends_on) throw BindError{e.span, "'" + e.name + "' depends on a stochastic variable"};
    std::vector<std::int64_t> idx;
    for (const auto& a : e.args) idx.push_back(eval_int(*a, locals));
    auto off = c->offset(idx);
    if (!off) throw BindError{e.span, "index out of range for '" + e.name + "'"};
    return c->values[*off];
  }

  IndexRange resolve_dim(const Expr& e, const Locals& locals) {
    if (e.kind == Expr::Kind::RangeLit) {
      IndexRange r;
      r.lo = eval_int(*e.args[0], locals);
      r.hi = eval_int(*e.args[1], locals);
      return r;
    }
    if (e.kind == Expr::Kind::Ref && e.args.empty()) {
      const SourceDecl* d = decl(e.name);
      if (!d || (d->kind != SourceDecl::Kind::Range && d->kind != SourceDecl::Kind::Enum)) {
        throw BindError{e.span, "unknown index range '" + e.name + "'"};
      }
      require(e.name);
      const IndexRange* r = model_.find_range(e.name);
      if (!r) throw BindError{e.span, "'" + e.name + "' could not be resolved"};
      return *r;
    }
    throw BindError{e.span, "expected a range name or lo..hi"};
  }

  // ---- declarations ----

  void bind_range(const SourceDecl& d) {
    IndexRange r;
    r.name = d.name;
    r.lo = eval_int(*d.lo, {});
    r.hi = eval_int(*d.hi, {});
    model_.ranges.push_back(std::move(r));
  }

  void bind_enum(const SourceDecl& d) {
    std::vector<std::string> members;
    if (d.members) {
      members = *d.members;
    } else {
      const DataValue& v = external(d);
      if (v.kind != DataValue::Kind::Set && v.kind != DataValue::Kind::List) {
        throw BindError{v.span, "enum '" + d.name + "' expects a set of names"};
      }
      for (const auto& item : v.items) {
        if (item.kind != DataValue::Kind::Name) throw BindError{item.span, "enum members must be names"};
        members.push_back(item.name);
      }
    }
    std::set<std::string> seen;
    for (const auto& m : members) {
      if (!seen.insert(m).second) throw BindError{d.span, "duplicate member '" + m + "' in enum '" + d.name + "'"};
      if (by_name_.count(m)) throw BindError{d.span, "enum member '" + m + "' clashes with a declaration"};
    }
    IndexRange r;
    r.name = d.name;
    r.lo = 1;
    r.hi = static_cast<std::int64_t>(members.size());
    r.labels = std::move(members);
    model_.ranges.push_back(std::move(r));
  }

  Rational check_number(const SourceDecl& d, const DataValue& v) {
    if (v.kind != DataValue::Kind::Number) {
      throw BindError{v.span, "type mismatch: '" + d.name + "' expects a number here"};
    }
    check_scalar(d, v.number, v.span);
    return v.number;
  }

  void check_scalar(const SourceDecl& d, const Rational& value, Span span) {
    if (!d.is_float && !is_integer(value)) {
      throw BindError{span, "type mismatch: '" + d.name + "' is int but got " + to_exact_string(value)};
    }
    if (d.nonneg && value < 0) throw BindError{span, "'" + d.name + "' must be nonnegative"};
  }

  void bind_constant(const SourceDecl& d) {
    Constant c;
    c.name = d.name;
    c.span = d.span;
    for (const auto& dim : d.dims) c.dims.push_back(resolve_dim(*dim, {}));
    if (!d.depends_on.empty()) {
      const SourceDecl* sd = decl(d.depends_on);
      if (!sd || sd->kind != SourceDecl::Kind::Stoch) {
        throw BindError{d.span, "'" + d.name + "' depends on undeclared stochastic variable '" + d.depends_on + "'"};
      }
      require(d.depends_on);
      c.depends_on = *model_.find_stoch(d.depends_on);
      const IndexRange& stage = model_.stoch_vars[*c.depends_on].stage_range;
      for (std::size_t k = c.dims.size(); k-- > 0;) {
        const auto& r = c.dims[k];
        if ((!stage.name.empty() && r.name == stage.name) || (!r.is_enum() && r.lo == stage.lo && r.hi == stage.hi)) {
          c.stage_dim = k;
          break;
        }
      }
      if (!c.stage_dim) {
        throw BindError{d.span, "'" + d.name + "' depends on '" + d.depends_on + "' but has no stage index"};
      }
    }
    std::size_t cells = 1;
    for (const auto& r : c.dims) {
      if (r.size() <= 0) throw BindError{d.span, "'" + d.name + "' has an empty index range"};
      cells *= static_cast<std::size_t>(r.size());
      if (cells > 50'000'000) throw BindError{d.span, "'" + d.name + "' is too large"};
    }

    if (c.dims.empty()) {
      Rational v;
      switch (d.init) {
        case SourceDecl::Init::Expr:
          v = eval(*d.init_expr, {});
          check_scalar(d, v, d.span);
          break;
        case SourceDecl::Init::External: v = check_number(d, external(d)); break;
        case SourceDecl::Init::Literal: v = check_number(d, d.literal); break;
        default: throw BindError{d.span, "constant '" + d.name + "' has no value"};
      }
      if (c.depends_on) throw BindError{d.span, "scalar '" + d.name + "' cannot depend on a stochastic variable"};
      c.values = {v};
      model_.constants.push_back(std::move(c));
      return;
    }

    const DataValue* data = nullptr;
    if (d.init == SourceDecl::Init::External) {
      data = &external(d);
    } else if (d.init == SourceDecl::Init::Literal) {
      data = &d.literal;
    } else {
      throw BindError{d.span, "array constant '" + d.name + "' needs a literal or external data"};
    }
    c.values.reserve(cells);
    fill(d, c, *data, 0);
    model_.constants.push_back(std::move(c));
  }

  void fill(const SourceDecl& d, Constant& c, const DataValue& v, std::size_t dim) {
    if (dim == c.dims.size()) {
      if (v.kind == DataValue::Kind::Tuple) {
        if (!c.depends_on) {
          throw BindError{v.span, "type mismatch: tuple given for '" + d.name + "', which has no '^' dependence"};
        }
        if (v.items.empty()) throw BindError{v.span, "empty outcome tuple for '" + d.name + "'"};
        std::vector<Rational> outcomes;
        for (const auto& item : v.items) outcomes.push_back(check_number(d, item));
        c.values.push_back(outcomes.front());
        c.outcome_values.push_back(std::move(outcomes));
        return;
      }
      const Rational x = check_number(d, v);
      c.values.push_back(x);
      if (c.depends_on) c.outcome_values.push_back({x});
      return;
    }
    if (v.kind != DataValue::Kind::List) {
      throw BindError{v.span, "dimension mismatch: '" + d.name + "' expects a list for index " + std::to_string(dim + 1)};
    }
    const auto expected = static_cast<std::size_t>(c.dims[dim].size());
    if (v.items.size() != expected) {
      throw BindError{v.span, "dimension mismatch: '" + d.name + "' index " + std::to_string(dim + 1) + " expects " +
                                  std::to_string(expected) + " entries, got " + std::to_string(v.items.size())};
    }
    for (const auto& item : v.items) fill(d, c, item, dim + 1);
  }

  void bind_stoch(const SourceDecl& d) {
    StochVar sv;
    sv.name = d.name;
    sv.span = d.span;
    sv.is_float = d.is_float;
    sv.stage_range = resolve_dim(*d.dims[0], {});
    if (sv.stage_range.size() < 1) throw BindError{d.span, "stochastic variable '" + d.name + "' has no stages"};
    std::optional<IndexRange> values;
    if (d.type_range) values = resolve_dim(*d.type_range, {});
    const auto m = static_cast<std::size_t>(sv.stage_range.size());

    if (d.init == SourceDecl::Init::Uniform) {
      sv.distribution.kind = Distribution::Kind::Uniform;
      if (!values || values->size() < 1) throw BindError{d.span, "uniform needs a nonempty value range"};
      std::vector<Outcome> group;
      for (std::int64_t v = values->lo; v <= values->hi; ++v) group.push_back({Rational(v), Rational(1, values->size())});
      sv.distribution.groups.assign(m, group);
    } else {
      const DataValue& data = d.init == SourceDecl::Init::External ? external(d) : d.literal;
      if (data.kind != DataValue::Kind::List || data.items.empty()) {
        throw BindError{data.span, "type mismatch: distribution of '" + d.name + "' must be a nonempty list"};
      }
      const bool tuples = data.items.front().kind == DataValue::Kind::Tuple;
      auto outcome = [&](const DataValue& item) {
        if (item.kind != DataValue::Kind::Weighted) {
          throw BindError{item.span, "distribution entries of '" + d.name + "' must be written value (prob)"};
        }
        if (!sv.is_float && !is_integer(item.number)) {
          throw BindError{item.span, "type mismatch: '" + d.name + "' is int but has value " +
                                         to_exact_string(item.number)};
        }
        if (values && (!is_integer(item.number) || item.number < values->lo || item.number > values->hi)) {
          throw BindError{item.span, "value " + to_exact_string(item.number) + " outside the type of '" + d.name + "'"};
        }
        return Outcome{item.number, item.weight};
      };
      if (tuples) {
        sv.distribution.kind = Distribution::Kind::Independent;
        for (const auto& stage : data.items) {
          if (stage.kind != DataValue::Kind::Tuple) {
            throw BindError{stage.span, "mixed distribution syntax for '" + d.name + "'"};
          }
          std::vector<Outcome> group;
          for (const auto& item : stage.items) group.push_back(outcome(item));
          sv.distribution.groups.push_back(std::move(group));
        }
      } else {
        sv.distribution.kind = Distribution::Kind::Conditional;
        std::vector<Outcome> group;
        Rational sum = 0;
        for (std::size_t k = 0; k < data.items.size(); ++k) {
          group.push_back(outcome(data.items[k]));
          sum += group.back().prob;
          if (sums_to_one(sum)) {
            sv.distribution.groups.push_back(std::move(group));
            group.clear();
            sum = 0;
          } else if (to_double(sum) > 1 + kProbabilityTolerance) {
            throw BindError{data.items[k].span,
                            "malformed-distribution: branch group " + std::to_string(sv.distribution.groups.size() + 1) +
                                " of '" + d.name + "' sums past 1"};
          }
        }
        if (!group.empty()) {
          throw BindError{data.span, "malformed-distribution: branch group " +
                                         std::to_string(sv.distribution.groups.size() + 1) + " of '" + d.name +
                                         "' sums to " + to_exact_string(sum)};
        }
      }
    }
    model_.stoch_vars.push_back(std::move(sv));
  }

  void settle_stages() {
    if (model_.stoch_vars.empty()) {
      model_.stages = 1;
      return;
    }
    model_.stage_range = model_.stoch_vars.front().stage_range;
    model_.stages = static_cast<int>(model_.stage_range->size());
  }

  void bind_var(const SourceDecl& d) {
    DecisionVar v;
    v.name = d.name;
    v.span = d.span;
    v.robust = d.robust;
    for (const auto& dim : d.dims) {
      v.dims.push_back(resolve_dim(*dim, {}));
      if (v.dims.back().size() <= 0) throw BindError{d.span, "'" + d.name + "' has an empty index range"};
    }
    if (d.lo) {
      v.lo = eval_int(*d.lo, {});
      v.hi = eval_int(*d.hi, {});
    } else {
      v.lo = d.nonneg ? 0 : -options_.maxint;
      v.hi = options_.maxint;
    }
    if (d.nonneg && v.lo < 0) v.lo = 0;
    if (model_.stage_range) {
      const auto& st = *model_.stage_range;
      for (std::size_t k = v.dims.size(); k-- > 0;) {
        const auto& r = v.dims[k];
        const bool named = !st.name.empty() && r.name == st.name;
        const bool spans = !r.is_enum() && r.lo == st.lo && (r.hi == st.hi || r.hi == st.hi + 1);
        if (named || spans) {
          v.stage_dim = k;
          break;
        }
      }
    }
    model_.decision_vars.push_back(std::move(v));
  }

  // ---- constraints and objective ----

  bool mentions_decision(const Expr& e) {
    if (e.kind == Expr::Kind::Ref) {
      const SourceDecl* d = decl(e.name);
      if (d && (d->kind == SourceDecl::Kind::Var || d->kind == SourceDecl::Kind::Stoch)) return true;
    }
    for (const auto& a : e.args) {
      if (mentions_decision(*a)) return true;
    }
    return false;
  }

  void reject_expected(const Expr& e) {
    if (e.kind == Expr::Kind::Expected) throw BindError{e.span, "expected(...) is only allowed in the objective"};
    for (const auto& a : e.args) reject_expected(*a);
  }

  void bind_constraint(const SourceConstraint& c) {
    ConstraintDecl out;
    out.kind = c.chance ? ConstraintDecl::Kind::Chance : ConstraintDecl::Kind::Hard;
    out.quantifiers = c.quantifiers;
    out.body = c.body;
    out.span = c.span;
    reject_expected(*c.body);
    if (c.chance) {
      out.threshold_op = c.threshold_op;
      out.threshold_expr = c.threshold;
      if (mentions_decision(*c.threshold)) {
        throw BindError{c.threshold->span, "chance thresholds containing decision or stochastic variables are not supported"};
      }
      out.threshold = eval(*c.threshold, {});
      if (out.threshold < 0 || out.threshold > 1) {
        throw BindError{c.threshold->span, "bad-threshold: chance threshold " + to_exact_string(out.threshold) +
                                               " outside [0,1]"};
      }
    }
    model_.constraints.push_back(std::move(out));
  }

  void bind_objective() {
    Objective& o = model_.objective;
    o.direction = src_.direction;
    o.kind = src_.goal;
    o.body = src_.goal_body;
    o.span = src_.goal_span;
    if (o.direction == Objective::Direction::Satisfy) {
      o.body = nullptr;
      return;
    }
    if (o.body) reject_expected(*o.body);
    if (src_.lambda) {
      if (mentions_decision(*src_.lambda)) throw BindError{src_.lambda->span, "mv lambda must be a constant"};
      o.lambda = eval(*src_.lambda, {});
    }
  }

  const SourceModel& src_;
  const DataBindings& data_;
  BindOptions options_;
  StochasticModel model_;
  std::map<std::string, std::size_t> by_name_;
  std::map<std::size_t, State> state_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

FrontendResult<StochasticModel> bind(const SourceModel& source, const DataBindings& data, const BindOptions& options) {
  return Binder(source, data, options).run();
}

FrontendResult<StochasticModel> load_model(std::string_view model_text, std::string_view data_text,
                                           const BindOptions& options) {
  FrontendResult<StochasticModel> out;
  auto parsed = parse_model_text(model_text);
  auto data = parse_data(data_text);
  out.diagnostics = parsed.diagnostics;
  out.diagnostics.insert(out.diagnostics.end(), data.diagnostics.begin(), data.diagnostics.end());
  if (!parsed.ok() || !data.ok()) return out;
  auto bound = bind(*parsed.value, *data.value, options);
  out.diagnostics.insert(out.diagnostics.end(), bound.diagnostics.begin(), bound.diagnostics.end());
  out.value = std::move(bound.value);
  return out;
}

}  // namespace stochcp
