#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "apiward/metrics/metrics.h"

namespace apiward::metrics {

// Well-known variant ids in score files. Per-experiment variants are named
// "<experiment>-student" and "<experiment>-teacher".
inline constexpr const char* kStudentBaseline = "student_baseline";
inline constexpr const char* kTeacherUndefended = "teacher_undefended";

using ScoreTables = std::map<std::string, ScoreTable>;

// Score files hold one {variant_id, benchmark, score} record per line. The
// score is an exact decimal string (a JSON number is accepted and read back
// through its shortest decimal form). `path` may be a file or a directory
// of *.jsonl files. Throws ParseError or MetricError.
ScoreTables read_score_tables(const std::filesystem::path& path);
void add_score_records(ScoreTables& tables, std::istream& in, const std::string& source);

// Builds one report per experiment found in `tables`, sorted by id. Requires
// the student baseline; DC is filled in when both teacher tables exist.
std::vector<MetricsReport> build_reports(const ScoreTables& tables);

std::string render_results_table(const std::vector<MetricsReport>& reports);
std::string render_cost_table(const std::vector<MetricsReport>& reports);
std::string render_category_table(const std::vector<CategorySummary>& summary);
std::string render_tradeoff_csv(const std::vector<TradeoffRecord>& records);
std::vector<std::string> report_records(const std::vector<MetricsReport>& reports);

struct ReportArtifacts {
  std::vector<std::filesystem::path> paths;
};

// Writes report.txt, report.jsonl, tradeoff.csv and categories.csv.
ReportArtifacts write_report_dir(const std::filesystem::path& out_dir,
                                 const std::vector<MetricsReport>& reports);

}  // namespace apiward::metrics
