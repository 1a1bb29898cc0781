#pragma once

#include "stochcp/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stochcp {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  Span span;
  std::string message;

  /// "file:line:col: error: message"
  std::string format(const std::string& file) const;
};

enum class TokKind {
  Ident,
  Keyword,
  Int,
  Decimal,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Lt,
  Gt,
  Le,
  Ge,
  Eq,
  Ne,
  Plus,
  Minus,
  Star,
  Slash,
  Comma,
  Semi,
  Colon,
  DotDot,
  Ellipsis,
  Hat,
  End,
};

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  Span span;
};

/// Short form used in tests and debug output, e.g. "kw prob", "ident x", "rat 0.8", "ge".
std::string describe(const Token& tok);

struct TokenizeResult {
  std::vector<Token> tokens;  // always terminated by an End token
  std::vector<Diagnostic> diagnostics;
};

TokenizeResult tokenize(std::string_view text);

bool is_keyword(std::string_view word);

/// Literal data: numbers, names, [lists], <tuples>, {sets} and weighted outcomes `v (p)`.
struct DataValue {
  enum class Kind { Number, Name, List, Tuple, Set, Weighted };
  Kind kind = Kind::Number;
  Rational number;
  Rational weight;  // Weighted only
  std::string name;
  std::vector<DataValue> items;
  Span span;
};

std::string print_data(const DataValue& v);
bool structurally_equal(const DataValue& a, const DataValue& b);

struct SourceDecl {
  enum class Kind { Range, Enum, Constant, Stoch, Var };
  enum class Init { None, External, Expr, Literal, Uniform };

  Kind kind = Kind::Constant;
  std::string name;
  Span span;
  ExprPtr lo;  // range bounds or variable domain
  ExprPtr hi;
  std::optional<std::vector<std::string>> members;
  std::vector<ExprPtr> dims;
  bool is_float = false;
  bool nonneg = false;
  bool robust = false;
  std::string depends_on;
  ExprPtr type_range;  // stoch value range (uniform)
  Init init = Init::None;
  ExprPtr init_expr;
  DataValue literal;
};

struct SourceConstraint {
  std::vector<Binding> quantifiers;
  bool chance = false;
  ExprPtr body;  // Compare
  CmpOp threshold_op = CmpOp::Ge;
  ExprPtr threshold;
  Span span;
};

struct SourceModel {
  std::vector<SourceDecl> decls;
  std::vector<std::pair<std::string, Span>> robust_names;
  std::optional<ReductionSpec> scenario;
  Span scenario_span;
  Objective::Direction direction = Objective::Direction::Satisfy;
  Objective::Kind goal = Objective::Kind::Expected;
  ExprPtr goal_body;
  ExprPtr lambda;
  Span goal_span;
  std::vector<SourceConstraint> constraints;
};

template <typename T>
struct FrontendResult {
  std::optional<T> value;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return value.has_value(); }
};

FrontendResult<SourceModel> parse_model(const std::vector<Token>& tokens);
/// tokenize + parse_model; lexer diagnostics are kept.
FrontendResult<SourceModel> parse_model_text(std::string_view text);

std::string print_model(const SourceModel& model);
bool structurally_equal(const SourceModel& a, const SourceModel& b);

struct DataBindings {
  std::vector<std::pair<std::string, DataValue>> entries;

  const DataValue* find(const std::string& name) const;
};

FrontendResult<DataBindings> parse_data(std::string_view text);

struct BindOptions {
  std::int64_t maxint = 1'000'000;
};

FrontendResult<StochasticModel> bind(const SourceModel& source, const DataBindings& data, const BindOptions& options = {});

/// Full front end: model text + data text -> validated StochasticModel.
FrontendResult<StochasticModel> load_model(std::string_view model_text, std::string_view data_text,
                                           const BindOptions& options = {});

}  // namespace stochcp
