#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace apiward {

enum class Domain { kMath, kCode, kOpenEnded };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);  // throws ParseError

struct Prompt {
  std::string id;
  Domain domain = Domain::kOpenEnded;
  std::string text;

  bool operator==(const Prompt&) const = default;
};

// Teacher decoding settings. Defaults are greedy decoding with a 4096 token cap.
struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 4096;

  bool operator==(const GenerationParams&) const = default;
};

enum class DefenseKind { kNone, kParaphrase, kPoison, kCotRemoval, kTokenLimit };

std::string_view to_string(DefenseKind k);
std::optional<DefenseKind> parse_defense_kind(std::string_view s);

// One defense with its strength knob. Exactly the parameter matching `kind`
// is set; validate_config() reports anything else.
struct DefenseConfig {
  DefenseKind kind = DefenseKind::kNone;
  std::optional<double> alpha;        // paraphrase
  std::optional<double> poison_rate;  // poison
  std::optional<int> max_tokens;      // token_limit

  static DefenseConfig none() { return {}; }
  static DefenseConfig paraphrase(double alpha) {
    return {DefenseKind::kParaphrase, alpha, std::nullopt, std::nullopt};
  }
  static DefenseConfig poison(double rate) {
    return {DefenseKind::kPoison, std::nullopt, rate, std::nullopt};
  }
  static DefenseConfig cot_removal() {
    return {DefenseKind::kCotRemoval, std::nullopt, std::nullopt, std::nullopt};
  }
  static DefenseConfig token_limit(int limit) {
    return {DefenseKind::kTokenLimit, std::nullopt, std::nullopt, limit};
  }

  // Short human-readable form, e.g. "paraphrase(alpha=0.3)".
  std::string label() const;

  bool operator==(const DefenseConfig&) const = default;
};

// Taxonomy bucket of a defense: "none", "perturbation", "poisoning", "throttling".
std::string_view category_of(DefenseKind k);

struct ExperimentSpec {
  std::string id;
  std::vector<DefenseConfig> defenses;  // applied in order; empty means none
  std::uint64_t seed = 42;

  // Category of the (single) defense; "mixed" for heterogeneous pipelines.
  std::string category() const;

  bool operator==(const ExperimentSpec&) const = default;
};

enum class BenchmarkId { kMath500, kHumanEvalPlus, kMtBench };

inline constexpr BenchmarkId kAllBenchmarks[] = {
    BenchmarkId::kMath500, BenchmarkId::kHumanEvalPlus, BenchmarkId::kMtBench};

std::string_view to_string(BenchmarkId b);
std::optional<BenchmarkId> parse_benchmark(std::string_view s);
// Column header used in rendered tables: MATH, HE+, MT-B.
std::string_view short_name(BenchmarkId b);
// True for benchmarks reported as percentages; MT-Bench is a 1-10 grade.
bool is_percent_scale(BenchmarkId b);

struct TeacherResponse {
  std::string prompt_id;
  std::string text;
  std::string model_id;
  GenerationParams gen_params;
};

struct DefendedResponse {
  std::string prompt_id;
  std::string text;
  std::vector<DefenseConfig> defenses_applied;
  std::string defense_id;
  bool poisoned = false;
};

}  // namespace apiward
