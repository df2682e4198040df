#include "apiward/harness/answers.h"

#include <cctype>
#include <optional>

namespace apiward::harness {

namespace {

constexpr std::string_view kSpace = " \t\r\n\f\v";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(kSpace) - b + 1);
}

// Index one past the '}' closing the group whose '{' is at `open`, or npos.
std::size_t close_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

bool strip_pair(std::string_view& s, std::string_view open, std::string_view close) {
  if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
    s = s.substr(open.size(), s.size() - open.size() - close.size());
    return true;
  }
  return false;
}

std::string unwrap(std::string_view s) {
  for (;;) {
    const auto before = s;
    s = trim(s);
    strip_pair(s, "$$", "$$") || strip_pair(s, "$", "$") || strip_pair(s, "\\(", "\\)") ||
        strip_pair(s, "\\[", "\\]");
    for (std::string_view cmd : {std::string_view("\\boxed"), std::string_view("\\fbox")}) {
      if (s.starts_with(cmd) && s.size() > cmd.size() && s[cmd.size()] == '{' &&
          close_brace(s, cmd.size()) == s.size()) {
        s = s.substr(cmd.size() + 1, s.size() - cmd.size() - 2);
      }
    }
    if (s == before) return std::string(s);
  }
}

// Replaces `cmd{X}` with X everywhere.
std::string unwrap_command(std::string s, std::string_view cmd) {
  const std::string marker = std::string(cmd) + "{";
  std::size_t pos = 0;
  while ((pos = s.find(marker, pos)) != std::string::npos) {
    const auto open = pos + cmd.size();
    const auto end = close_brace(s, open);
    if (end == std::string::npos) break;
    s = s.substr(0, pos) + s.substr(open + 1, end - open - 2) + s.substr(end);
  }
  return s;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string rewrite(std::string s) {
  for (auto cmd : {"\\textbf", "\\text", "\\mathrm"}) s = unwrap_command(std::move(s), cmd);
  s = replace_all(std::move(s), "\\dfrac", "\\frac");
  s = replace_all(std::move(s), "\\tfrac", "\\frac");

  static constexpr std::string_view kFrac = "\\frac{";
  std::size_t pos;
  while ((pos = s.find(kFrac)) != std::string::npos) {
    const auto num_open = pos + kFrac.size() - 1;
    const auto num_end = close_brace(s, num_open);
    if (num_end == std::string::npos || num_end >= s.size() || s[num_end] != '{') break;
    const auto den_end = close_brace(s, num_end);
    if (den_end == std::string::npos) break;
    const auto num = s.substr(num_open + 1, num_end - num_open - 2);
    const auto den = s.substr(num_end + 1, den_end - num_end - 2);
    s = s.substr(0, pos) + "(" + num + ")/(" + den + ")" + s.substr(den_end);
  }
  for (auto token : {"\\left", "\\right", "\\!", "\\,", "\\;"}) s = replace_all(std::move(s), token, "");
  return s;
}

// term := [+-]? number | '(' [+-]? number ')'
std::optional<Rational> parse_term(std::string_view t) {
  if (t.size() >= 2 && t.front() == '(' && t.back() == ')') t = t.substr(1, t.size() - 2);
  Rational r;
  if (!try_parse_decimal(t, r)) return std::nullopt;
  return r;
}

std::optional<Rational> as_rational(std::string_view s) {
  std::string compact;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
  }
  std::string_view v = compact;
  bool negative = false;
  if (!v.empty() && (v.front() == '+' || v.front() == '-')) {
    negative = v.front() == '-';
    v.remove_prefix(1);
  }
  std::optional<Rational> value;
  if (auto slash = v.find('/'); slash == std::string_view::npos) {
    value = parse_term(v);
  } else {
    auto num = parse_term(v.substr(0, slash));
    auto den = parse_term(v.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    value = *num / *den;
  }
  if (value && negative) *value = -*value;
  return value;
}

std::string canonical_text(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

NormalizedAnswer normalize_answer(std::string_view answer) {
  const std::string s = unwrap(rewrite(unwrap(answer)));
  NormalizedAnswer out;
  if (auto r = as_rational(s)) {
    out.is_rational = true;
    out.value = *r;
  } else {
    out.text = canonical_text(s);
  }
  return out;
}

bool answers_equivalent(std::string_view a, std::string_view b) {
  return normalize_answer(a) == normalize_answer(b);
}

}  // namespace apiward::harness
