#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace stochcp {

/// Exact rational used for probabilities, constants and objective values.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "12", "-0.25", "3.125" into an exact rational. No exponent form.
std::optional<Rational> parse_decimal(std::string_view text);

/// Rounds half away from zero and prints with exactly `digits` decimals.
std::string to_fixed(const Rational& value, int digits);

/// Shortest exact decimal when the denominator is 2^a*5^b, else "num/den".
std::string to_exact_string(const Rational& value);

double to_double(const Rational& value);

inline BigInt numerator_of(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt denominator_of(const Rational& r) { return boost::multiprecision::denominator(r); }

inline bool is_integer(const Rational& r) { return denominator_of(r) == 1; }

/// Throws std::overflow_error when the value does not fit.
std::int64_t to_int64(const BigInt& value);
std::int64_t floor_to_int64(const Rational& r);
std::int64_t ceil_to_int64(const Rational& r);

BigInt lcm(const BigInt& a, const BigInt& b);

}  // namespace stochcp
