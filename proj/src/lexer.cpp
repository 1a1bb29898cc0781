#include "stochcp/dsl.hpp"

#include <array>
#include <cctype>

namespace stochcp {

namespace {

constexpr std::array<std::string_view, 30> kKeywords = {
    "stoch",    "var",      "robust",  "prob",     "expected", "mv",      "spread",  "downside",
    "upside",   "scenario", "forall",  "sum",      "min",      "max",     "minimize", "maximize",
    "subject",  "to",       "int",     "float",    "range",    "enum",    "in",      "top",
    "sample",   "lhs",      "DGR",     "uniform",  "poisson",  "maxint",
};

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords) {
    if (k == word) return true;
  }
  return false;
}

std::string Diagnostic::format(const std::string& file) const {
  std::string out = file;
  out += ":" + std::to_string(span.line) + ":" + std::to_string(span.column) + ": ";
  out += severity == Severity::Error ? "error: " : "warning: ";
  out += message;
  return out;
}

std::string describe(const Token& tok) {
  switch (tok.kind) {
    case TokKind::Ident: return "ident " + tok.text;
    case TokKind::Keyword: return "kw " + tok.text;
    case TokKind::Int: return "int " + tok.text;
    case TokKind::Decimal: return "rat " + tok.text;
    case TokKind::LParen: return "lparen";
    case TokKind::RParen: return "rparen";
    case TokKind::LBracket: return "lbracket";
    case TokKind::RBracket: return "rbracket";
    case TokKind::LBrace: return "lbrace";
    case TokKind::RBrace: return "rbrace";
    case TokKind::Lt: return "lt";
    case TokKind::Gt: return "gt";
    case TokKind::Le: return "le";
    case TokKind::Ge: return "ge";
    case TokKind::Eq: return "eq";
    case TokKind::Ne: return "ne";
    case TokKind::Plus: return "plus";
    case TokKind::Minus: return "minus";
    case TokKind::Star: return "star";
    case TokKind::Slash: return "slash";
    case TokKind::Comma: return "comma";
    case TokKind::Semi: return "semi";
    case TokKind::Colon: return "colon";
    case TokKind::DotDot: return "dotdot";
    case TokKind::Ellipsis: return "ellipsis";
    case TokKind::Hat: return "hat";
    case TokKind::End: return "end";
  }
  return "?";
}

TokenizeResult tokenize(std::string_view text) {
  TokenizeResult out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto peek = [&](std::size_t off) -> char { return i + off < text.size() ? text[i + off] : '\0'; };
  auto emit = [&](TokKind kind, std::size_t len, Span span) {
    out.tokens.push_back({kind, std::string(text.substr(i, len)), span});
    advance(len);
  };

  while (i < text.size()) {
    const char c = text[i];
    const Span here{line, col};
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
      advance(1);
      continue;
    }
    if (c == '/' && peek(1) == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && peek(1) == '*') {
      advance(2);
      bool closed = false;
      while (i < text.size()) {
        if (text[i] == '*' && peek(1) == '/') {
          advance(2);
          closed = true;
          break;
        }
        advance(1);
      }
      if (!closed) out.diagnostics.push_back({Severity::Error, here, "unterminated block comment"});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t len = 0;
      while (std::isdigit(static_cast<unsigned char>(peek(len)))) ++len;
      bool decimal = false;
      if (peek(len) == '.' && std::isdigit(static_cast<unsigned char>(peek(len + 1)))) {
        decimal = true;
        ++len;
        while (std::isdigit(static_cast<unsigned char>(peek(len)))) ++len;
      }
      emit(decimal ? TokKind::Decimal : TokKind::Int, len, here);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t len = 0;
      while (std::isalnum(static_cast<unsigned char>(peek(len))) || peek(len) == '_') ++len;
      const auto word = text.substr(i, len);
      emit(is_keyword(word) ? TokKind::Keyword : TokKind::Ident, len, here);
      continue;
    }
    if (c == '.' && peek(1) == '.' && peek(2) == '.') {
      emit(TokKind::Ellipsis, 3, here);
      continue;
    }
    if (c == '.' && peek(1) == '.') {
      emit(TokKind::DotDot, 2, here);
      continue;
    }
    if (c == '<' && peek(1) == '=') {
      emit(TokKind::Le, 2, here);
      continue;
    }
    if (c == '>' && peek(1) == '=') {
      emit(TokKind::Ge, 2, here);
      continue;
    }
    if ((c == '<' && peek(1) == '>') || (c == '!' && peek(1) == '=')) {
      emit(TokKind::Ne, 2, here);
      continue;
    }
    if (c == '=' && peek(1) == '=') {
      emit(TokKind::Eq, 2, here);
      continue;
    }
    TokKind kind = TokKind::End;
    switch (c) {
      case '(': kind = TokKind::LParen; break;
      case ')': kind = TokKind::RParen; break;
      case '[': kind = TokKind::LBracket; break;
      case ']': kind = TokKind::RBracket; break;
      case '{': kind = TokKind::LBrace; break;
      case '}': kind = TokKind::RBrace; break;
      case '<': kind = TokKind::Lt; break;
      case '>': kind = TokKind::Gt; break;
      case '=': kind = TokKind::Eq; break;
      case '+': kind = TokKind::Plus; break;
      case '-': kind = TokKind::Minus; break;
      case '*': kind = TokKind::Star; break;
      case '/': kind = TokKind::Slash; break;
      case ',': kind = TokKind::Comma; break;
      case ';': kind = TokKind::Semi; break;
      case ':': kind = TokKind::Colon; break;
      case '^': kind = TokKind::Hat; break;
      default: break;
    }
    if (kind != TokKind::End) {
      emit(kind, 1, here);
      continue;
    }
    // skip a whole UTF-8 sequence so the column stays on the offending character
    std::size_t len = 1;
    const auto uc = static_cast<unsigned char>(c);
    if (uc >= 0xF0) {
      len = 4;
    } else if (uc >= 0xE0) {
      len = 3;
    } else if (uc >= 0xC0) {
      len = 2;
    }
    std::string shown;
    if (uc >= 0x20 && uc < 0x7F) {
      shown = std::string("'") + c + "'";
    } else {
      static const char* hex = "0123456789abcdef";
      shown = std::string("byte 0x") + hex[uc >> 4] + hex[uc & 15];
    }
    out.diagnostics.push_back({Severity::Error, here, "illegal character " + shown});
    ++i;
    for (std::size_t k = 1; k < len && i < text.size() && (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80; ++k) {
      ++i;
    }
    ++col;
  }
  out.tokens.push_back({TokKind::End, "", Span{line, col}});
  return out;
}

}  // namespace stochcp
