#include "apiward/metrics/report_io.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "apiward/core/digest.h"
#include "apiward/core/errors.h"
#include "apiward/core/manifest.h"

namespace apiward::metrics {

namespace fs = std::filesystem;

namespace {

std::string raw_score(BenchmarkId b, const Rational& s) {
  return format_fixed(s, is_percent_scale(b) ? 1 : 2);
}

std::string cell(const std::optional<Rational>& v) { return v ? format_fixed(*v, 3) : "---"; }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

void add_score_records(ScoreTables& tables, std::istream& in, const std::string& source) {
  for_each_jsonl(in, source, [&](const nlohmann::json& j, int line) {
    const auto where = source + ":" + std::to_string(line) + ": ";
    if (!j.is_object() || !j.contains("variant_id") || !j.contains("benchmark") ||
        !j.contains("score") || !j["variant_id"].is_string() || !j["benchmark"].is_string()) {
      throw ParseError(where + "expected {variant_id, benchmark, score}");
    }
    const auto variant = j["variant_id"].get<std::string>();
    const auto bench = parse_benchmark(j["benchmark"].get<std::string>());
    if (!bench) throw ParseError(where + "unknown benchmark '" + j["benchmark"].get<std::string>() + "'");
    Rational score;
    const auto& s = j["score"];
    std::string text;
    if (s.is_string()) {
      text = s.get<std::string>();
    } else if (s.is_number_integer()) {
      text = std::to_string(s.get<long long>());
    } else if (s.is_number_float()) {
      text = canonical_real(s.get<double>());
    }
    if (!try_parse_decimal(text, score)) {
      throw ParseError(where + "score must be an exact decimal, got " + s.dump());
    }
    try {
      check_ranges({variant, {{*bench, score}}});
    } catch (const MetricError& e) {
      throw MetricError(where + e.what());
    }
    auto& table = tables[variant];
    table.variant_id = variant;
    if (!table.scores.emplace(*bench, score).second) {
      throw ParseError(where + "duplicate score for " + variant + "/" + std::string(to_string(*bench)));
    }
  });
}

ScoreTables read_score_tables(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw ParseError("score path " + path.string() + " does not exist");
  }
  ScoreTables tables;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw ParseError("cannot open " + f.string());
    add_score_records(tables, in, f.string());
  }
  for (const auto& [_, t] : tables) check_ranges(t);
  return tables;
}

std::vector<MetricsReport> build_reports(const ScoreTables& tables) {
  auto base = tables.find(kStudentBaseline);
  if (base == tables.end()) {
    throw MetricError(std::string("missing baseline table '") + kStudentBaseline + "'");
  }
  const ScoreTable* teacher_ref = nullptr;
  if (auto it = tables.find(kTeacherUndefended); it != tables.end()) teacher_ref = &it->second;

  std::vector<MetricsReport> out;
  static constexpr std::string_view kStudentSuffix = "-student";
  for (const auto& [variant, table] : tables) {
    if (!variant.ends_with(kStudentSuffix)) continue;
    const auto exp = variant.substr(0, variant.size() - kStudentSuffix.size());
    const ScoreTable* teacher = nullptr;
    if (auto it = tables.find(exp + "-teacher"); it != tables.end() && teacher_ref) {
      teacher = &it->second;
    }
    out.push_back(build_report(exp, table, base->second, teacher, teacher ? teacher_ref : nullptr));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.experiment_id < b.experiment_id; });
  return out;
}

std::string render_results_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << pad_right("ID", 6) << pad_right("Defense", 26);
  for (auto b : kAllBenchmarks) os << pad(std::string(short_name(b)), 7);
  for (auto b : kAllBenchmarks) os << pad("DE " + std::string(short_name(b)), 10);
  os << pad("DE avg", 8) << pad("DC avg", 8) << "\n";
  for (const auto& r : reports) {
    os << pad_right(r.experiment_id, 6) << pad_right(r.defense.empty() ? "-" : r.defense, 26);
    for (auto b : kAllBenchmarks) os << pad(raw_score(b, r.student_scores.at(b)), 7);
    for (auto b : kAllBenchmarks) os << pad(format_fixed(r.de.at(b), 3), 10);
    os << pad(format_fixed(r.de_avg, 3), 8) << pad(cell(r.dc_avg), 8) << "\n";
  }
  return os.str();
}

std::string render_cost_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << pad_right("ID", 6) << pad_right("Defense", 26);
  for (auto b : kAllBenchmarks) os << pad("DC " + std::string(short_name(b)), 10);
  os << pad("DC avg", 8) << "\n";
  for (const auto& r : reports) {
    if (!r.dc) continue;
    os << pad_right(r.experiment_id, 6) << pad_right(r.defense.empty() ? "-" : r.defense, 26);
    for (auto b : kAllBenchmarks) os << pad(format_fixed(r.dc->at(b), 3), 10);
    os << pad(cell(r.dc_avg), 8) << "\n";
  }
  return os.str();
}

std::string render_category_table(const std::vector<CategorySummary>& summary) {
  std::ostringstream os;
  os << pad_right("Category", 14);
  for (auto b : kAllBenchmarks) os << pad("DE " + std::string(short_name(b)), 10);
  os << pad("DE avg", 8) << "\n";
  for (const auto& s : summary) {
    os << pad_right(s.category, 14);
    for (auto b : kAllBenchmarks) os << pad(format_fixed(s.de_mean.at(b), 3), 10);
    os << pad(format_fixed(s.de_avg, 3), 8) << "\n";
  }
  return os.str();
}

std::string render_tradeoff_csv(const std::vector<TradeoffRecord>& records) {
  std::ostringstream os;
  os << "experiment_id,dc_avg,de_avg,category\n";
  for (const auto& r : records) {
    os << r.experiment_id << "," << (r.dc_avg ? format_fixed(*r.dc_avg, 3) : "") << ","
       << format_fixed(r.de_avg, 3) << "," << r.category << "\n";
  }
  return os.str();
}

std::vector<std::string> report_records(const std::vector<MetricsReport>& reports) {
  std::vector<std::string> lines;
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["experiment_id"] = r.experiment_id;
    j["category"] = r.category;
    j["defense"] = r.defense;
    for (auto b : kAllBenchmarks) {
      j["score_" + std::string(to_string(b))] = raw_score(b, r.student_scores.at(b));
    }
    for (auto b : kAllBenchmarks) j["de_" + std::string(to_string(b))] = format_fixed(r.de.at(b), 3);
    j["de_avg"] = format_fixed(r.de_avg, 3);
    if (r.dc) {
      for (auto b : kAllBenchmarks) {
        j["dc_" + std::string(to_string(b))] = format_fixed(r.dc->at(b), 3);
      }
      j["dc_avg"] = format_fixed(*r.dc_avg, 3);
    }
    lines.push_back(dump_line(j));
  }
  return lines;
}

ReportArtifacts write_report_dir(const fs::path& out_dir, const std::vector<MetricsReport>& reports) {
  fs::create_directories(out_dir);
  ReportArtifacts out;

  std::ostringstream text;
  text << "Distillation effectiveness (DE) and average distillation cost (DC)\n\n"
       << render_results_table(reports);
  const bool any_dc = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.dc.has_value(); });
  if (any_dc) text << "\nPer-benchmark distillation cost (DC)\n\n" << render_cost_table(reports);
  const auto summary = summarize_categories(reports);
  if (!summary.empty()) text << "\nAverage DE by defense category\n\n" << render_category_table(summary);

  auto write = [&](const fs::path& p, const std::string& content) {
    write_text(p, content);
    out.paths.push_back(p);
  };
  write(out_dir / "report.txt", text.str());
  std::string records;
  for (const auto& line : report_records(reports)) records += line + "\n";
  write(out_dir / "report.jsonl", records);
  write(out_dir / "tradeoff.csv", render_tradeoff_csv(emit_tradeoff_data(reports)));

  std::ostringstream cats;
  cats << "category,experiments";
  for (auto b : kAllBenchmarks) cats << ",de_" << to_string(b);
  cats << ",de_avg\n";
  for (const auto& s : summary) {
    cats << s.category << "," << s.experiments;
    for (auto b : kAllBenchmarks) cats << "," << format_fixed(s.de_mean.at(b), 3);
    cats << "," << format_fixed(s.de_avg, 3) << "\n";
  }
  write(out_dir / "categories.csv", cats.str());
  return out;
}

}  // namespace apiward::metrics
