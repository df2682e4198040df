#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apiward/core/decimal.h"
#include "apiward/core/types.h"

namespace apiward::metrics {

using Scores = std::map<BenchmarkId, Rational>;

// Benchmark scores of one model variant, e.g. "A08-student" or
// "teacher_undefended". Percent benchmarks lie in [0,100], MT-Bench in [1,10].
struct ScoreTable {
  std::string variant_id;
  Scores scores;
};

// Throws MetricError if any score is outside its benchmark's scale.
void check_ranges(const ScoreTable& table);

// Defended student score over baseline student score. May exceed 1.
Rational compute_de(const Rational& defended, const Rational& baseline);
// Arithmetic mean over benchmarks. Throws MetricError on an empty list.
Rational compute_de_avg(std::span<const Rational> de_values);
// 1 - defended/undefended teacher score. Negative when the defense helps.
Rational compute_dc(const Rational& defended_teacher, const Rational& undefended_teacher);

struct MetricsReport {
  std::string experiment_id;
  std::string category;  // taxonomy bucket of the preset, or "custom"
  std::string defense;   // e.g. "paraphrase(alpha=0.3)"
  Scores student_scores;
  Scores de;
  Rational de_avg;
  std::optional<Scores> dc;  // present only when teacher tables were given
  std::optional<Rational> dc_avg;
};

// Per-benchmark DE and DC plus their means, all exact. Teacher tables are
// optional as a pair. Throws MetricError naming any missing benchmark.
MetricsReport build_report(const std::string& experiment_id, const ScoreTable& student_defended,
                           const ScoreTable& student_baseline,
                           const ScoreTable* teacher_defended = nullptr,
                           const ScoreTable* teacher_undefended = nullptr);

struct TradeoffRecord {
  std::string experiment_id;
  std::optional<Rational> dc_avg;
  Rational de_avg;
  std::string category;
};

// One scatter point per non-baseline report, sorted by experiment id.
std::vector<TradeoffRecord> emit_tradeoff_data(std::span<const MetricsReport> reports);

// Mean DE per defense category, averaging the per-experiment DE cells of the
// category (so `de_avg` is the mean over experiments x benchmarks).
struct CategorySummary {
  std::string category;
  Scores de_mean;
  Rational de_avg;
  int experiments = 0;
};

std::vector<CategorySummary> summarize_categories(std::span<const MetricsReport> reports);

}  // namespace apiward::metrics
