#pragma once

#include <string>
#include <string_view>

#include "apiward/core/decimal.h"

namespace apiward::harness {

// Canonical form of a math answer: an exact rational when the unwrapped text
// is a number or a ratio of numbers, otherwise a whitespace-collapsed
// lowercase string.
struct NormalizedAnswer {
  bool is_rational = false;
  Rational value;
  std::string text;

  bool operator==(const NormalizedAnswer& o) const {
    return is_rational == o.is_rational && (is_rational ? value == o.value : text == o.text);
  }
};

// Strips $...$, \(...\), \[...\], \boxed{} and \fbox{} wrappers; unwraps
// \text{}, \textbf{} and \mathrm{}; rewrites \frac{a}{b} (and \dfrac,
// \tfrac) to (a)/(b); drops \left, \right and thin spaces.
NormalizedAnswer normalize_answer(std::string_view answer);

// "1/2", "0.5" and "\frac{1}{2}" are all equivalent.
bool answers_equivalent(std::string_view a, std::string_view b);

}  // namespace apiward::harness
