#include "apiward/metrics/metrics.h"

#include <algorithm>

#include "apiward/core/config.h"
#include "apiward/core/errors.h"

namespace apiward::metrics {

namespace {

const Rational& require(const ScoreTable& t, BenchmarkId b, const char* role) {
  auto it = t.scores.find(b);
  if (it == t.scores.end()) {
    throw MetricError(std::string(role) + " table '" + t.variant_id + "' is missing benchmark " +
                      std::string(to_string(b)));
  }
  return it->second;
}

Rational mean(const Scores& s) {
  std::vector<Rational> v;
  for (const auto& [_, x] : s) v.push_back(x);
  return compute_de_avg(v);
}

}  // namespace

void check_ranges(const ScoreTable& table) {
  for (const auto& [b, s] : table.scores) {
    const bool ok = is_percent_scale(b) ? (s >= 0 && s <= 100) : (s >= 1 && s <= 10);
    if (!ok) {
      throw MetricError("score " + format_fixed(s, 3) + " for " + std::string(to_string(b)) +
                        " in '" + table.variant_id + "' is outside " +
                        (is_percent_scale(b) ? "[0,100]" : "[1,10]"));
    }
  }
}

Rational compute_de(const Rational& defended, const Rational& baseline) {
  if (baseline <= 0) throw MetricError("DE undefined: baseline score must be positive");
  return defended / baseline;
}

Rational compute_de_avg(std::span<const Rational> de_values) {
  if (de_values.empty()) throw MetricError("cannot average an empty list of DE values");
  Rational sum = 0;
  for (const auto& v : de_values) sum += v;
  return sum / static_cast<long long>(de_values.size());
}

Rational compute_dc(const Rational& defended_teacher, const Rational& undefended_teacher) {
  if (undefended_teacher <= 0) {
    throw MetricError("DC undefined: undefended teacher score must be positive");
  }
  return Rational(1) - defended_teacher / undefended_teacher;
}

MetricsReport build_report(const std::string& experiment_id, const ScoreTable& student_defended,
                           const ScoreTable& student_baseline, const ScoreTable* teacher_defended,
                           const ScoreTable* teacher_undefended) {
  if ((teacher_defended == nullptr) != (teacher_undefended == nullptr)) {
    throw MetricError("teacher tables for " + experiment_id +
                      " must be given together (defended and undefended)");
  }
  check_ranges(student_defended);
  check_ranges(student_baseline);

  MetricsReport r;
  r.experiment_id = experiment_id;
  if (const auto* preset = find_preset(experiment_id)) {
    r.category = preset->category();
    for (const auto& d : preset->defenses) r.defense += d.label();
  } else {
    r.category = "custom";
  }

  for (auto b : kAllBenchmarks) {
    const auto& s = require(student_defended, b, "student_defended");
    r.student_scores[b] = s;
    r.de[b] = compute_de(s, require(student_baseline, b, "student_baseline"));
  }
  r.de_avg = mean(r.de);

  if (teacher_defended) {
    check_ranges(*teacher_defended);
    check_ranges(*teacher_undefended);
    Scores dc;
    for (auto b : kAllBenchmarks) {
      dc[b] = compute_dc(require(*teacher_defended, b, "teacher_defended"),
                         require(*teacher_undefended, b, "teacher_undefended"));
    }
    r.dc_avg = mean(dc);
    r.dc = std::move(dc);
  }
  return r;
}

std::vector<TradeoffRecord> emit_tradeoff_data(std::span<const MetricsReport> reports) {
  std::vector<TradeoffRecord> out;
  for (const auto& r : reports) {
    if (r.category == "none") continue;
    out.push_back({r.experiment_id, r.dc_avg, r.de_avg, r.category});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.experiment_id < b.experiment_id; });
  return out;
}

std::vector<CategorySummary> summarize_categories(std::span<const MetricsReport> reports) {
  std::map<std::string, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports) {
    if (r.category != "none") groups[r.category].push_back(&r);
  }
  static const std::vector<std::string> kOrder = {"perturbation", "poisoning", "throttling"};
  std::vector<std::string> names;
  for (const auto& c : kOrder) {
    if (groups.contains(c)) names.push_back(c);
  }
  for (const auto& [c, _] : groups) {
    if (std::find(kOrder.begin(), kOrder.end(), c) == kOrder.end()) names.push_back(c);
  }

  std::vector<CategorySummary> out;
  for (const auto& name : names) {
    const auto& members = groups[name];
    CategorySummary s;
    s.category = name;
    s.experiments = static_cast<int>(members.size());
    std::vector<Rational> cells;
    for (auto b : kAllBenchmarks) {
      std::vector<Rational> col;
      for (const auto* r : members) col.push_back(r->de.at(b));
      s.de_mean[b] = compute_de_avg(col);
      cells.insert(cells.end(), col.begin(), col.end());
    }
    s.de_avg = compute_de_avg(cells);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace apiward::metrics
