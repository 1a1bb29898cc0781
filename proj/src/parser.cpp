#include "stochcp/dsl.hpp"

#include <sstream>

namespace stochcp {

namespace {

struct SyntaxError {
  Span span;
  std::string message;
};

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {
    if (toks_.empty() || toks_.back().kind != TokKind::End) {
      owned_ = tokens;
      owned_.push_back({TokKind::End, "", toks_.empty() ? Span{1, 1} : toks_.back().span});
      toks_ = owned_;
    }
  }

  FrontendResult<SourceModel> parse_model() {
    SourceModel model;
    bool have_instruction = false;
    while (!at(TokKind::End)) {
      try {
        parse_statement(model, have_instruction);
      } catch (const SyntaxError& e) {
        diags_.push_back({Severity::Error, e.span, e.message});
        synchronize();
      }
    }
    if (!have_instruction && diags_.empty()) {
      diags_.push_back({Severity::Error, cur().span, "model has no instruction (minimize, maximize or subject to)"});
    }
    FrontendResult<SourceModel> out;
    out.diagnostics = diags_;
    if (!has_error()) out.value = std::move(model);
    return out;
  }

  FrontendResult<DataBindings> parse_data() {
    DataBindings data;
    while (!at(TokKind::End)) {
      try {
        const Token& name = cur();
        if (name.kind != TokKind::Ident && name.kind != TokKind::Keyword) fail("expected a data name");
        next();
        expect(TokKind::Eq, "'='");
        DataValue v = parse_data_value();
        expect(TokKind::Semi, "';'");
        if (data.find(name.text)) {
          diags_.push_back({Severity::Error, name.span, "duplicate data binding '" + name.text + "'"});
        } else {
          data.entries.emplace_back(name.text, std::move(v));
        }
      } catch (const SyntaxError& e) {
        diags_.push_back({Severity::Error, e.span, e.message});
        synchronize();
      }
    }
    FrontendResult<DataBindings> out;
    out.diagnostics = diags_;
    if (!has_error()) out.value = std::move(data);
    return out;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t off = 1) const {
    const std::size_t i = pos_ + off;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(TokKind k) const { return cur().kind == k; }
  bool at_kw(const char* kw) const { return cur().kind == TokKind::Keyword && cur().text == kw; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& message) const { throw SyntaxError{cur().span, message}; }
  std::string found() const {
    if (at(TokKind::End)) return "end of input";
    return "'" + cur().text + "'";
  }
  const Token& expect(TokKind k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what + ", found " + found());
    return next();
  }
  void expect_kw(const char* kw) {
    if (!at_kw(kw)) fail(std::string("expected '") + kw + "', found " + found());
    next();
  }
  std::string expect_ident(const char* what) {
    if (!at(TokKind::Ident)) fail(std::string("expected ") + what + ", found " + found());
    return next().text;
  }
  bool has_error() const {
    for (const auto& d : diags_) {
      if (d.severity == Severity::Error) return true;
    }
    return false;
  }
  void synchronize() {
    depth_ = 0;
    while (!at(TokKind::End)) {
      if (at(TokKind::Semi)) {
        next();
        return;
      }
      next();
    }
  }

  // ---- statements ----

  void parse_statement(SourceModel& model, bool& have_instruction) {
    if (at_kw("range")) return parse_range(model);
    if (at_kw("enum")) return parse_enum(model);
    if (at_kw("int") || at_kw("float")) return parse_constant(model);
    if (at_kw("stoch")) return parse_stoch(model);
    if (at_kw("var")) return parse_var(model, false);
    if (at_kw("robust")) {
      if (peek().kind == TokKind::Keyword && (peek().text == "int" || peek().text == "float")) {
        return parse_var(model, true);
      }
      next();
      do {
        const Span s = cur().span;
        model.robust_names.emplace_back(expect_ident("a variable name"), s);
      } while (at(TokKind::Comma) && (next(), true));
      expect(TokKind::Semi, "';'");
      return;
    }
    if (at_kw("scenario")) return parse_scenario(model);
    if (at_kw("minimize") || at_kw("maximize") || at_kw("subject")) {
      if (have_instruction) {
        diags_.push_back({Severity::Error, cur().span, "a model has exactly one instruction"});
      }
      have_instruction = true;
      return parse_instruction(model);
    }
    fail("expected a declaration or instruction, found " + found());
  }

  ExprPtr parse_range_expr() {
    ExprPtr lo = parse_expr();
    if (at(TokKind::DotDot)) {
      const Span s = cur().span;
      next();
      ExprPtr hi = parse_expr();
      return Expr::make_binary(Expr::Kind::RangeLit, lo, hi, s);
    }
    if (lo->kind != Expr::Kind::Ref || !lo->args.empty() || !lo->dep.empty()) {
      throw SyntaxError{lo->span, "expected a range name or lo..hi"};
    }
    return lo;
  }

  void parse_range(SourceModel& model) {
    SourceDecl d;
    d.kind = SourceDecl::Kind::Range;
    d.span = cur().span;
    next();
    d.name = expect_ident("a range name");
    if (at(TokKind::Eq)) next();
    const bool bracketed = at(TokKind::LBracket);
    if (bracketed) next();
    d.lo = parse_expr();
    expect(TokKind::DotDot, "'..'");
    d.hi = parse_expr();
    if (bracketed) expect(TokKind::RBracket, "']'");
    expect(TokKind::Semi, "';'");
    model.decls.push_back(std::move(d));
  }

  void parse_enum(SourceModel& model) {
    SourceDecl d;
    d.kind = SourceDecl::Kind::Enum;
    d.span = cur().span;
    next();
    d.name = expect_ident("an enum name");
    if (at(TokKind::Eq)) next();
    if (at(TokKind::Ellipsis)) {
      next();
    } else if (at(TokKind::LBrace)) {
      next();
      std::vector<std::string> members;
      if (!at(TokKind::RBrace)) {
        members.push_back(expect_ident("an enum member"));
        while (at(TokKind::Comma)) {
          next();
          members.push_back(expect_ident("an enum member"));
        }
      }
      expect(TokKind::RBrace, "'}'");
      d.members = std::move(members);
    }
    expect(TokKind::Semi, "';'");
    model.decls.push_back(std::move(d));
  }

  std::vector<ExprPtr> parse_dims() {
    std::vector<ExprPtr> dims;
    if (!at(TokKind::LBracket)) return dims;
    next();
    dims.push_back(parse_range_expr());
    while (at(TokKind::Comma)) {
      next();
      dims.push_back(parse_range_expr());
    }
    expect(TokKind::RBracket, "']'");
    return dims;
  }

  void parse_init(SourceDecl& d) {
    if (at(TokKind::Ellipsis)) {
      next();
      d.init = SourceDecl::Init::External;
    } else if (at(TokKind::LBracket) || at(TokKind::Lt) || at(TokKind::LBrace)) {
      d.init = SourceDecl::Init::Literal;
      d.literal = parse_data_value();
    } else {
      d.init = SourceDecl::Init::Expr;
      d.init_expr = parse_expr();
    }
  }

  void parse_constant(SourceModel& model) {
    SourceDecl d;
    d.kind = SourceDecl::Kind::Constant;
    d.span = cur().span;
    d.is_float = next().text == "float";
    if (at(TokKind::Plus)) {
      next();
      d.nonneg = true;
    }
    d.name = expect_ident("a constant name");
    d.dims = parse_dims();
    if (at(TokKind::Hat)) {
      next();
      d.depends_on = expect_ident("a stochastic variable name");
    }
    expect(TokKind::Eq, "'='");
    parse_init(d);
    expect(TokKind::Semi, "';'");
    model.decls.push_back(std::move(d));
  }

  void parse_stoch(SourceModel& model) {
    SourceDecl d;
    d.kind = SourceDecl::Kind::Stoch;
    d.span = cur().span;
    next();
    d.is_float = true;
    if (at_kw("int") || at_kw("float")) {
      d.is_float = next().text == "float";
      if (at(TokKind::Plus)) next();
    } else if (at(TokKind::Ident) && peek().kind == TokKind::Ident) {
      d.is_float = false;
      d.type_range = Expr::make_ref(cur().text, {}, cur().span);
      next();
    } else if (!(at(TokKind::Ident) && peek().kind == TokKind::LBracket)) {
      const Span s = cur().span;
      d.is_float = false;
      ExprPtr lo = parse_expr();
      expect(TokKind::DotDot, "'..' in the value range");
      ExprPtr hi = parse_expr();
      d.type_range = Expr::make_binary(Expr::Kind::RangeLit, lo, hi, s);
    }
    d.name = expect_ident("a stochastic variable name");
    d.dims = parse_dims();
    if (d.dims.size() != 1) {
      throw SyntaxError{d.span, "stochastic variable '" + d.name + "' must have exactly one (stage) index"};
    }
    if (at(TokKind::Eq)) next();
    if (at_kw("uniform")) {
      next();
      d.init = SourceDecl::Init::Uniform;
      if (!d.type_range) {
        throw SyntaxError{d.span, "uniform distribution needs a value range type, e.g. 'stoch 1..6 x[Stage] uniform;'"};
      }
    } else if (at_kw("poisson")) {
      fail("poisson distributions are not supported");
    } else if (at(TokKind::Ellipsis)) {
      next();
      d.init = SourceDecl::Init::External;
    } else if (at(TokKind::LBracket)) {
      d.init = SourceDecl::Init::Literal;
      d.literal = parse_data_value();
    } else {
      fail("expected a distribution, found " + found());
    }
    expect(TokKind::Semi, "';'");
    model.decls.push_back(std::move(d));
  }

  void parse_var(SourceModel& model, bool robust) {
    SourceDecl d;
    d.kind = SourceDecl::Kind::Var;
    d.robust = robust;
    d.span = cur().span;
    next();
    if (at_kw("float")) fail("float decision variables are not supported");
    expect_kw("int");
    if (at(TokKind::Plus)) {
      next();
      d.nonneg = true;
    }
    d.name = expect_ident("a variable name");
    d.dims = parse_dims();
    if (at_kw("in")) {
      next();
      d.lo = parse_expr();
      expect(TokKind::DotDot, "'..'");
      d.hi = parse_expr();
    }
    expect(TokKind::Semi, "';'");
    model.decls.push_back(std::move(d));
  }

  void parse_scenario(SourceModel& model) {
    const Span s = cur().span;
    next();
    ReductionSpec spec;
    if (at_kw("expected")) {
      next();
      spec.kind = ReductionSpec::Kind::Expected;
    } else {
      if (at_kw("top")) {
        spec.kind = ReductionSpec::Kind::Top;
      } else if (at_kw("sample")) {
        spec.kind = ReductionSpec::Kind::Sample;
      } else if (at_kw("lhs")) {
        spec.kind = ReductionSpec::Kind::Lhs;
      } else if (at_kw("DGR")) {
        spec.kind = ReductionSpec::Kind::Dgr;
      } else {
        fail("expected expected, top, sample, lhs or DGR, found " + found());
      }
      next();
      const Token& n = expect(TokKind::Int, "a scenario count");
      long long count = 0;
      try {
        count = std::stoll(n.text);
      } catch (...) {
        throw SyntaxError{n.span, "scenario count out of range"};
      }
      if (count < 1) throw SyntaxError{n.span, "scenario count must be at least 1"};
      spec.count = static_cast<std::size_t>(count);
    }
    expect(TokKind::Semi, "';'");
    if (model.scenario) {
      diags_.push_back({Severity::Error, s, "at most one scenario directive is allowed"});
      return;
    }
    model.scenario = spec;
    model.scenario_span = s;
  }

  void parse_instruction(SourceModel& model) {
    model.goal_span = cur().span;
    if (at_kw("subject")) {
      model.direction = Objective::Direction::Satisfy;
    } else {
      model.direction = next().text == "minimize" ? Objective::Direction::Minimize : Objective::Direction::Maximize;
      parse_goal(model);
    }
    if (at_kw("subject")) {
      next();
      expect_kw("to");
      expect(TokKind::LBrace, "'{'");
      while (!at(TokKind::RBrace) && !at(TokKind::End)) {
        try {
          parse_constraint({}, model.constraints);
        } catch (const SyntaxError& e) {
          diags_.push_back({Severity::Error, e.span, e.message});
          depth_ = 0;
          while (!at(TokKind::End) && !at(TokKind::RBrace) && !at(TokKind::Semi)) next();
          if (at(TokKind::Semi)) next();
        }
      }
      expect(TokKind::RBrace, "'}'");
    }
    if (at(TokKind::Semi)) next();
  }

  void parse_goal(SourceModel& model) {
    auto call1 = [&](Objective::Kind kind) {
      model.goal = kind;
      next();
      expect(TokKind::LParen, "'('");
      model.goal_body = parse_expr();
      if (kind == Objective::Kind::MeanVariance) {
        expect(TokKind::Comma, "',' before lambda");
        model.lambda = parse_expr();
      }
      expect(TokKind::RParen, "')'");
    };
    if (at_kw("expected")) return call1(Objective::Kind::Expected);
    if (at_kw("mv")) return call1(Objective::Kind::MeanVariance);
    if (at_kw("spread")) return call1(Objective::Kind::Spread);
    if (at_kw("downside")) return call1(Objective::Kind::Downside);
    if (at_kw("upside")) return call1(Objective::Kind::Upside);
    model.goal = Objective::Kind::Expected;
    model.goal_body = parse_expr();
  }

  std::vector<Binding> parse_bindings() {
    std::vector<Binding> out;
    do {
      Binding b;
      b.span = cur().span;
      b.var = expect_ident("an index name");
      expect_kw("in");
      b.range = parse_range_expr();
      out.push_back(std::move(b));
    } while (at(TokKind::Comma) && (next(), true));
    return out;
  }

  void parse_constraint(const std::vector<Binding>& outer, std::vector<SourceConstraint>& out) {
    if (at_kw("forall")) {
      next();
      expect(TokKind::LParen, "'('");
      std::vector<Binding> scope = outer;
      for (auto& b : parse_bindings()) scope.push_back(std::move(b));
      expect(TokKind::RParen, "')'");
      if (at(TokKind::LBrace)) {
        next();
        while (!at(TokKind::RBrace) && !at(TokKind::End)) parse_constraint(scope, out);
        expect(TokKind::RBrace, "'}'");
        if (at(TokKind::Semi)) next();
        return;
      }
      return parse_constraint(scope, out);
    }
    SourceConstraint c;
    c.quantifiers = outer;
    c.span = cur().span;
    if (at_kw("prob")) {
      next();
      c.chance = true;
      expect(TokKind::LParen, "'('");
      c.body = parse_comparison();
      expect(TokKind::RParen, "')'");
      auto op = comparison_op();
      if (!op) fail("expected a comparison operator after prob(...), found " + found());
      next();
      c.threshold_op = *op;
      c.threshold = parse_expr();
    } else {
      c.body = parse_comparison();
    }
    expect(TokKind::Semi, "';'");
    out.push_back(std::move(c));
  }

  std::optional<CmpOp> comparison_op() const {
    switch (cur().kind) {
      case TokKind::Eq: return CmpOp::Eq;
      case TokKind::Ne: return CmpOp::Ne;
      case TokKind::Lt: return CmpOp::Lt;
      case TokKind::Gt: return CmpOp::Gt;
      case TokKind::Le: return CmpOp::Le;
      case TokKind::Ge: return CmpOp::Ge;
      default: return std::nullopt;
    }
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_expr();
    auto op = comparison_op();
    if (!op) fail("expected a comparison operator, found " + found());
    const Span s = cur().span;
    next();
    ExprPtr rhs = parse_expr();
    return Expr::make_compare(*op, lhs, rhs, s);
  }

  // ---- expressions ----

  ExprPtr parse_expr() {
    if (++depth_ > 200) {
      --depth_;
      fail("expression nested too deeply");
    }
    ExprPtr e = parse_multiplicative();
    while (at(TokKind::Plus) || at(TokKind::Minus)) {
      const Span s = cur().span;
      const auto kind = next().kind == TokKind::Plus ? Expr::Kind::Add : Expr::Kind::Sub;
      e = Expr::make_binary(kind, e, parse_multiplicative(), s);
    }
    --depth_;
    return e;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr e = parse_unary();
    while (at(TokKind::Star) || at(TokKind::Slash)) {
      const Span s = cur().span;
      const auto kind = next().kind == TokKind::Star ? Expr::Kind::Mul : Expr::Kind::Div;
      e = Expr::make_binary(kind, e, parse_unary(), s);
    }
    return e;
  }

  ExprPtr parse_unary() {
    if (at(TokKind::Minus)) {
      const Span s = cur().span;
      next();
      if (++depth_ > 200) {
        --depth_;
        fail("expression nested too deeply");
      }
      ExprPtr inner = parse_unary();
      --depth_;
      return Expr::make_unary(Expr::Kind::Neg, inner, s);
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Span s = cur().span;
    if (at(TokKind::Int) || at(TokKind::Decimal)) {
      auto v = parse_decimal(next().text);
      if (!v) throw SyntaxError{s, "malformed number"};
      return Expr::make_number(*v, s);
    }
    if (at_kw("maxint")) {
      next();
      return Expr::make_ref("maxint", {}, s);
    }
    if (at(TokKind::Ident)) {
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Ref;
      e->name = next().text;
      e->span = s;
      if (at(TokKind::LBracket)) {
        next();
        e->args.push_back(parse_expr());
        while (at(TokKind::Comma)) {
          next();
          e->args.push_back(parse_expr());
        }
        expect(TokKind::RBracket, "']'");
      }
      if (at(TokKind::Hat)) {
        next();
        e->dep = expect_ident("a stochastic variable name after '^'");
      }
      return e;
    }
    if (at(TokKind::LParen)) {
      next();
      ExprPtr e = parse_expr();
      if (auto op = comparison_op()) {
        const Span cs = cur().span;
        next();
        e = Expr::make_compare(*op, e, parse_expr(), cs);
      }
      expect(TokKind::RParen, "')'");
      return e;
    }
    if (at_kw("min") || at_kw("max")) {
      const auto kind = next().text == "min" ? Expr::Kind::Min : Expr::Kind::Max;
      expect(TokKind::LParen, "'('");
      std::vector<ExprPtr> args{parse_expr()};
      while (at(TokKind::Comma)) {
        next();
        args.push_back(parse_expr());
      }
      expect(TokKind::RParen, "')'");
      return Expr::make_call(kind, std::move(args), s);
    }
    if (at_kw("sum")) {
      next();
      expect(TokKind::LParen, "'('");
      auto bindings = parse_bindings();
      expect(TokKind::RParen, "')'");
      ExprPtr body = parse_expr();
      return Expr::make_sum(std::move(bindings), body, s);
    }
    if (at_kw("expected")) {
      next();
      expect(TokKind::LParen, "'('");
      ExprPtr inner = parse_expr();
      expect(TokKind::RParen, "')'");
      return Expr::make_unary(Expr::Kind::Expected, inner, s);
    }
    fail("expected an expression, found " + found());
  }

  // ---- data ----

  DataValue parse_data_value() {
    if (++depth_ > 200) {
      --depth_;
      fail("data nested too deeply");
    }
    DataValue v;
    v.span = cur().span;
    auto items = [&](TokKind close, const char* what) {
      next();
      if (!at(close)) {
        v.items.push_back(parse_data_value());
        while (at(TokKind::Comma)) {
          next();
          v.items.push_back(parse_data_value());
        }
      }
      expect(close, what);
    };
    if (at(TokKind::LBracket)) {
      v.kind = DataValue::Kind::List;
      items(TokKind::RBracket, "']'");
    } else if (at(TokKind::Lt)) {
      v.kind = DataValue::Kind::Tuple;
      items(TokKind::Gt, "'>'");
    } else if (at(TokKind::LBrace)) {
      v.kind = DataValue::Kind::Set;
      items(TokKind::RBrace, "'}'");
    } else if (at(TokKind::Ident)) {
      v.kind = DataValue::Kind::Name;
      v.name = next().text;
    } else {
      bool negative = false;
      if (at(TokKind::Minus)) {
        negative = true;
        next();
      }
      if (!at(TokKind::Int) && !at(TokKind::Decimal)) fail("expected a data value, found " + found());
      v.kind = DataValue::Kind::Number;
      v.number = *parse_decimal(next().text);
      if (negative) v.number = -v.number;
      if (at(TokKind::LParen)) {
        next();
        if (!at(TokKind::Int) && !at(TokKind::Decimal)) fail("expected a probability, found " + found());
        v.kind = DataValue::Kind::Weighted;
        v.weight = *parse_decimal(next().text);
        expect(TokKind::RParen, "')'");
      }
    }
    --depth_;
    return v;
  }

  std::vector<Token> owned_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::vector<Diagnostic> diags_;
};

bool equal_ptr(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return structurally_equal(*a, *b);
}

bool equal_exprs(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!equal_ptr(a[i], b[i])) return false;
  }
  return true;
}

bool equal_bindings(const std::vector<Binding>& a, const std::vector<Binding>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].var != b[i].var || !equal_ptr(a[i].range, b[i].range)) return false;
  }
  return true;
}

std::string print_dims(const std::vector<ExprPtr>& dims) {
  if (dims.empty()) return "";
  std::string out = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ", ";
    out += print_expr(*dims[i]);
  }
  return out + "]";
}

std::string print_bindings(const std::vector<Binding>& bindings) {
  std::string out;
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    if (i) out += ", ";
    out += bindings[i].var + " in " + print_expr(*bindings[i].range);
  }
  return out;
}

std::string print_comparison(const Expr& e) {
  return print_expr(*e.args[0]) + " " + to_string(e.op) + " " + print_expr(*e.args[1]);
}

}  // namespace

FrontendResult<SourceModel> parse_model(const std::vector<Token>& tokens) { return Parser(tokens).parse_model(); }

FrontendResult<SourceModel> parse_model_text(std::string_view text) {
  auto lexed = tokenize(text);
  auto parsed = parse_model(lexed.tokens);
  if (!lexed.diagnostics.empty()) {
    parsed.diagnostics.insert(parsed.diagnostics.begin(), lexed.diagnostics.begin(), lexed.diagnostics.end());
    parsed.value.reset();
  }
  return parsed;
}

FrontendResult<DataBindings> parse_data(std::string_view text) {
  auto lexed = tokenize(text);
  auto parsed = Parser(lexed.tokens).parse_data();
  if (!lexed.diagnostics.empty()) {
    parsed.diagnostics.insert(parsed.diagnostics.begin(), lexed.diagnostics.begin(), lexed.diagnostics.end());
    parsed.value.reset();
  }
  return parsed;
}

const DataValue* DataBindings::find(const std::string& name) const {
  for (const auto& [n, v] : entries) {
    if (n == name) return &v;
  }
  return nullptr;
}

std::string print_data(const DataValue& v) {
  auto list = [&](const char* open, const char* close) {
    std::string out = open;
    for (std::size_t i = 0; i < v.items.size(); ++i) {
      if (i) out += ", ";
      out += print_data(v.items[i]);
    }
    return out + close;
  };
  switch (v.kind) {
    case DataValue::Kind::Number: return to_exact_string(v.number);
    case DataValue::Kind::Name: return v.name;
    case DataValue::Kind::List: return list("[", "]");
    case DataValue::Kind::Tuple: return list("<", ">");
    case DataValue::Kind::Set: return list("{", "}");
    case DataValue::Kind::Weighted: return to_exact_string(v.number) + " (" + to_exact_string(v.weight) + ")";
  }
  return "?";
}

bool structurally_equal(const DataValue& a, const DataValue& b) {
  if (a.kind != b.kind || a.items.size() != b.items.size()) return false;
  if (a.number != b.number || a.weight != b.weight || a.name != b.name) return false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (!structurally_equal(a.items[i], b.items[i])) return false;
  }
  return true;
}

std::string print_model(const SourceModel& model) {
  std::ostringstream os;
  for (const auto& d : model.decls) {
    switch (d.kind) {
      case SourceDecl::Kind::Range:
        os << "range " << d.name << " = " << print_expr(*d.lo) << ".." << print_expr(*d.hi) << ";\n";
        break;
      case SourceDecl::Kind::Enum:
        os << "enum " << d.name;
        if (d.members) {
          os << " {";
          for (std::size_t i = 0; i < d.members->size(); ++i) os << (i ? ", " : "") << (*d.members)[i];
          os << "}";
        } else {
          os << " ...";
        }
        os << ";\n";
        break;
      case SourceDecl::Kind::Constant:
      case SourceDecl::Kind::Stoch: {
        if (d.kind == SourceDecl::Kind::Stoch) {
          os << "stoch ";
          if (d.type_range) {
            os << print_expr(*d.type_range) << " ";
          } else {
            os << (d.is_float ? "float " : "int ");
          }
        } else {
          os << (d.is_float ? "float" : "int") << (d.nonneg ? "+ " : " ");
        }
        os << d.name << print_dims(d.dims);
        if (!d.depends_on.empty()) os << "^" << d.depends_on;
        switch (d.init) {
          case SourceDecl::Init::External: os << " = ..."; break;
          case SourceDecl::Init::Expr: os << " = " << print_expr(*d.init_expr); break;
          case SourceDecl::Init::Literal: os << " = " << print_data(d.literal); break;
          case SourceDecl::Init::Uniform: os << " uniform"; break;
          case SourceDecl::Init::None: break;
        }
        os << ";\n";
        break;
      }
      case SourceDecl::Kind::Var:
        os << (d.robust ? "robust int" : "var int") << (d.nonneg ? "+ " : " ") << d.name << print_dims(d.dims);
        if (d.lo) os << " in " << print_expr(*d.lo) << ".." << print_expr(*d.hi);
        os << ";\n";
        break;
    }
  }
  for (const auto& [name, span] : model.robust_names) os << "robust " << name << ";\n";
  if (model.scenario) os << "scenario " << model.scenario->describe() << ";\n";
  switch (model.direction) {
    case Objective::Direction::Minimize: os << "minimize "; break;
    case Objective::Direction::Maximize: os << "maximize "; break;
    case Objective::Direction::Satisfy: break;
  }
  if (model.direction != Objective::Direction::Satisfy) {
    os << to_string(model.goal) << "(" << print_expr(*model.goal_body);
    if (model.goal == Objective::Kind::MeanVariance) os << ", " << print_expr(*model.lambda);
    os << ")\n";
  }
  os << "subject to {\n";
  for (const auto& c : model.constraints) {
    os << "  ";
    if (!c.quantifiers.empty()) os << "forall(" << print_bindings(c.quantifiers) << ") ";
    if (c.chance) {
      os << "prob(" << print_comparison(*c.body) << ") " << to_string(c.threshold_op) << " "
         << print_expr(*c.threshold);
    } else {
      os << print_comparison(*c.body);
    }
    os << ";\n";
  }
  os << "};\n";
  return os.str();
}

bool structurally_equal(const SourceModel& a, const SourceModel& b) {
  if (a.decls.size() != b.decls.size() || a.constraints.size() != b.constraints.size()) return false;
  for (std::size_t i = 0; i < a.decls.size(); ++i) {
    const auto& x = a.decls[i];
    const auto& y = b.decls[i];
    if (x.kind != y.kind || x.name != y.name || x.is_float != y.is_float || x.nonneg != y.nonneg ||
        x.robust != y.robust || x.depends_on != y.depends_on || x.init != y.init || x.members != y.members) {
      return false;
    }
    if (!equal_ptr(x.lo, y.lo) || !equal_ptr(x.hi, y.hi) || !equal_exprs(x.dims, y.dims) ||
        !equal_ptr(x.type_range, y.type_range) || !equal_ptr(x.init_expr, y.init_expr)) {
      return false;
    }
    if (x.init == SourceDecl::Init::Literal && !structurally_equal(x.literal, y.literal)) return false;
  }
  if (a.robust_names.size() != b.robust_names.size()) return false;
  for (std::size_t i = 0; i < a.robust_names.size(); ++i) {
    if (a.robust_names[i].first != b.robust_names[i].first) return false;
  }
  if (a.scenario.has_value() != b.scenario.has_value()) return false;
  if (a.scenario && (a.scenario->kind != b.scenario->kind || a.scenario->count != b.scenario->count)) return false;
  if (a.direction != b.direction) return false;
  if (a.direction != Objective::Direction::Satisfy) {
    if (a.goal != b.goal || !equal_ptr(a.goal_body, b.goal_body) || !equal_ptr(a.lambda, b.lambda)) return false;
  }
  for (std::size_t i = 0; i < a.constraints.size(); ++i) {
    const auto& x = a.constraints[i];
    const auto& y = b.constraints[i];
    if (x.chance != y.chance || !equal_bindings(x.quantifiers, y.quantifiers) || !equal_ptr(x.body, y.body)) {
      return false;
    }
    if (x.chance && (x.threshold_op != y.threshold_op || !equal_ptr(x.threshold, y.threshold))) return false;
  }
  return true;
}

}  // namespace stochcp
