#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace apiward {

using Rational = boost::multiprecision::cpp_rational;

// Parses "[+-]digits[.digits]" (or ".digits") exactly. Throws ParseError.
Rational parse_decimal(std::string_view text);
// As parse_decimal but returns false instead of throwing.
bool try_parse_decimal(std::string_view text, Rational& out);

// Round-half-even to `places` decimals, e.g. format_fixed(463/1000, 3) == "0.463".
std::string format_fixed(const Rational& value, int places);

double to_double(const Rational& value);

}  // namespace apiward
