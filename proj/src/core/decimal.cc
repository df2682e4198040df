#include "apiward/core/decimal.h"

#include <cctype>

#include "apiward/core/errors.h"

namespace apiward {

namespace bmp = boost::multiprecision;

bool try_parse_decimal(std::string_view text, Rational& out) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  bmp::cpp_int numerator = 0;
  bmp::cpp_int denominator = 1;
  int digits = 0;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.' && !seen_point) {
      seen_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    numerator = numerator * 10 + (c - '0');
    if (seen_point) denominator *= 10;
    ++digits;
  }
  if (digits == 0) return false;
  out = Rational(negative ? bmp::cpp_int(-numerator) : numerator, denominator);
  return true;
}

Rational parse_decimal(std::string_view text) {
  Rational r;
  if (!try_parse_decimal(text, r)) {
    throw ParseError("not an exact decimal: '" + std::string(text) + "'");
  }
  return r;
}

std::string format_fixed(const Rational& value, int places) {
  bmp::cpp_int scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  const Rational scaled = value * scale;
  bmp::cpp_int num = bmp::numerator(scaled);
  const bmp::cpp_int den = bmp::denominator(scaled);  // always positive
  const bool negative = num < 0;
  if (negative) num = -num;
  bmp::cpp_int q = num / den;
  const bmp::cpp_int rem2 = (num % den) * 2;
  if (rem2 > den || (rem2 == den && (q & 1) != 0)) ++q;

  std::string digits = q.str();
  if (static_cast<int>(digits.size()) <= places) {
    digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
  }
  std::string out;
  if (negative && q != 0) out.push_back('-');
  out += digits.substr(0, digits.size() - places);
  if (places > 0) {
    out.push_back('.');
    out += digits.substr(digits.size() - places);
  }
  return out;
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

}  // namespace apiward
