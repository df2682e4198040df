#include "apiward/core/types.h"

#include <sstream>

#include "apiward/core/digest.h"
#include "apiward/core/errors.h"

namespace apiward {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error("invalid configuration: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::kMath: return "math";
    case Domain::kCode: return "code";
    case Domain::kOpenEnded: return "open_ended";
  }
  return "open_ended";
}

Domain parse_domain(std::string_view s) {
  if (s == "math") return Domain::kMath;
  if (s == "code") return Domain::kCode;
  if (s == "open_ended") return Domain::kOpenEnded;
  throw ParseError("unknown domain '" + std::string(s) +
                   "' (expected math, code or open_ended)");
}

std::string_view to_string(DefenseKind k) {
  switch (k) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kParaphrase: return "paraphrase";
    case DefenseKind::kPoison: return "poison";
    case DefenseKind::kCotRemoval: return "cot_removal";
    case DefenseKind::kTokenLimit: return "token_limit";
  }
  return "none";
}

std::optional<DefenseKind> parse_defense_kind(std::string_view s) {
  for (auto k : {DefenseKind::kNone, DefenseKind::kParaphrase, DefenseKind::kPoison,
                 DefenseKind::kCotRemoval, DefenseKind::kTokenLimit}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string DefenseConfig::label() const {
  switch (kind) {
    case DefenseKind::kParaphrase:
      return "paraphrase(alpha=" + canonical_real(alpha.value_or(0)) + ")";
    case DefenseKind::kPoison:
      return "poison(r=" + canonical_real(poison_rate.value_or(0)) + ")";
    case DefenseKind::kTokenLimit:
      return "token_limit(L=" + std::to_string(max_tokens.value_or(0)) + ")";
    default:
      return std::string(to_string(kind));
  }
}

std::string_view category_of(DefenseKind k) {
  switch (k) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kParaphrase: return "perturbation";
    case DefenseKind::kPoison: return "poisoning";
    case DefenseKind::kCotRemoval:
    case DefenseKind::kTokenLimit: return "throttling";
  }
  return "none";
}

std::string ExperimentSpec::category() const {
  std::string_view cat = "none";
  for (const auto& d : defenses) {
    auto c = category_of(d.kind);
    if (c == "none") continue;
    if (cat != "none" && cat != c) return "mixed";
    cat = c;
  }
  return std::string(cat);
}

std::string_view to_string(BenchmarkId b) {
  switch (b) {
    case BenchmarkId::kMath500: return "math500";
    case BenchmarkId::kHumanEvalPlus: return "humaneval_plus";
    case BenchmarkId::kMtBench: return "mtbench";
  }
  return "math500";
}

std::optional<BenchmarkId> parse_benchmark(std::string_view s) {
  for (auto b : kAllBenchmarks) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

std::string_view short_name(BenchmarkId b) {
  switch (b) {
    case BenchmarkId::kMath500: return "MATH";
    case BenchmarkId::kHumanEvalPlus: return "HE+";
    case BenchmarkId::kMtBench: return "MT-B";
  }
  return "?";
}

bool is_percent_scale(BenchmarkId b) { return b != BenchmarkId::kMtBench; }

}  // namespace apiward
