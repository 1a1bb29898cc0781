#include "stochcp/rational.hpp"


#include <cctype>
#include <limits>
#include <stdexcept>

namespace stochcp {

std::optional<Rational> parse_decimal(std::string_view text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    negative = text[pos] == '-';
    ++pos;
  }
  BigInt digits = 0;
  BigInt scale = 1;
  bool seen_digit = false;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '.') {
      if (seen_point) return std::nullopt;
      seen_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    seen_digit = true;
    digits = digits * 10 + (c - '0');
    if (seen_point) scale *= 10;
  }
  if (!seen_digit) return std::nullopt;
  Rational r(digits, scale);
  return negative ? Rational(-r) : r;
}

std::string to_fixed(const Rational& value, int digits) {
  BigInt scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const Rational scaled = value * scale;
  const BigInt num = numerator_of(scaled);
  const BigInt den = denominator_of(scaled);
  const bool negative = num < 0;
  const BigInt absnum = negative ? BigInt(-num) : num;
  // round half away from zero
  BigInt rounded = (absnum * 2 + den) / (den * 2);
  std::string body = rounded.str();
  if (digits > 0) {
    if (body.size() <= static_cast<std::size_t>(digits)) {
      body.insert(0, static_cast<std::size_t>(digits) + 1 - body.size(), '0');
    }
    body.insert(body.size() - static_cast<std::size_t>(digits), ".");
  }
  if (negative && rounded != 0) body.insert(0, "-");
  return body;
}

std::string to_exact_string(const Rational& value) {
  BigInt den = denominator_of(value);
  int twos = 0;
  int fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return numerator_of(value).str() + "/" + denominator_of(value).str();
  const int digits = std::max(twos, fives);
  std::string s = to_fixed(value, digits);
  return s;
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

std::int64_t to_int64(const BigInt& value) {
  if (value > std::numeric_limits<std::int64_t>::max() ||
      value < std::numeric_limits<std::int64_t>::min()) {
    throw std::overflow_error("integer value out of 64-bit range: " + value.str());
  }
  return value.convert_to<std::int64_t>();
}

std::int64_t floor_to_int64(const Rational& r) {
  const BigInt num = numerator_of(r);
  const BigInt den = denominator_of(r);
  BigInt q = num / den;
  if (num % den != 0 && num < 0) q -= 1;
  return to_int64(q);
}

std::int64_t ceil_to_int64(const Rational& r) {
  const BigInt num = numerator_of(r);
  const BigInt den = denominator_of(r);
  BigInt q = num / den;
  if (num % den != 0 && num > 0) q += 1;
  return to_int64(q);
}

BigInt lcm(const BigInt& a, const BigInt& b) {
  if (a == 0 || b == 0) return 0;
  const BigInt g = boost::multiprecision::gcd(a, b);
  BigInt r = a / g * b;
  return r < 0 ? BigInt(-r) : r;
}

}  // namespace stochcp
