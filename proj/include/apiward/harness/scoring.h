#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "apiward/core/decimal.h"
#include "apiward/core/types.h"

namespace apiward::harness {

struct Verdict {
  enum class Kind { kPass, kFail, kGraded };
  Kind kind = Kind::kFail;
  Rational grade;      // kGraded only
  std::string detail;  // why it failed, e.g. "timeout"

  static Verdict pass() { return {Kind::kPass, 0, {}}; }
  static Verdict fail(std::string detail = {}) { return {Kind::kFail, 0, std::move(detail)}; }
  static Verdict graded(Rational g) { return {Kind::kGraded, std::move(g), {}}; }
};

struct CodeTests {
  std::string entry_point;
  std::string tests;
};

// Math: gold answer. Code: test bundle. MT-Bench: precomputed judge grade.
struct ReferenceSpec {
  BenchmarkId benchmark = BenchmarkId::kMath500;
  std::variant<std::string, CodeTests, Rational> payload;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  // Must be deterministic and safe to call concurrently.
  virtual Verdict score(std::string_view prediction, const ReferenceSpec& reference) const = 0;
};

// Extracts the final answer (same marker precedence as the CoT-removal
// defense) and compares it with the gold answer by answers_equivalent.
class MathScorer final : public Scorer {
 public:
  Verdict score(std::string_view prediction, const ReferenceSpec& reference) const override;
};

// Judge grades are data; the prediction is ignored.
class JudgeScorer final : public Scorer {
 public:
  Verdict score(std::string_view prediction, const ReferenceSpec& reference) const override;
};

using References = std::map<std::string, ReferenceSpec>;
using Predictions = std::map<std::string, std::string>;

// Reference files: math {id, gold}; code {id, entry_point, tests};
// judge {id, grade}. Throws ParseError.
References read_references(const std::filesystem::path& path, BenchmarkId benchmark);
// Prediction files: {id, prediction} per line. "prompt_id" and "text" are
// accepted as aliases so defended-set files can be scored directly.
Predictions read_predictions(const std::filesystem::path& path);

struct ItemVerdict {
  std::string id;
  Verdict verdict;
};

struct ScoreResult {
  BenchmarkId benchmark = BenchmarkId::kMath500;
  Rational score;  // percent of passes, or mean grade for MT-Bench
  int passes = 0;
  int total = 0;
  std::vector<ItemVerdict> items;  // sorted by id
};

// Scores every (prediction, reference) pair in parallel. Throws Error when
// the id sets are disjoint or either side has ids the other lacks.
ScoreResult score_outputs(const Predictions& predictions, const References& references,
                          const Scorer& scorer, int jobs = 1);

// Shortest exact decimal with at most `max_places` decimals, e.g. "75",
// "8.333333".
std::string score_string(const Rational& value, int max_places = 6);

// Score-file record {variant_id, benchmark, score}.
std::string score_record(const std::string& variant_id, BenchmarkId benchmark,
                         const Rational& score);

}  // namespace apiward::harness
