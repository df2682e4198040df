#include "apiward/harness/grid.h"

#include <sstream>

#include "apiward/core/config.h"
#include "apiward/metrics/report_io.h"

namespace apiward::harness {

bool GridResult::ok() const {
  if (report_error) return false;
  for (const auto& e : experiments) {
    if (e.error || !e.failures.empty()) return false;
  }
  return true;
}

std::string GridResult::summary() const {
  std::ostringstream os;
  for (const auto& e : experiments) {
    os << e.experiment_id << ": ";
    if (e.error) {
      os << "FAILED " << *e.error << "\n";
      continue;
    }
    os << e.rows << " rows, " << e.poisoned << " poisoned, " << e.failures.size()
       << " failures\n";
    for (const auto& f : e.failures) os << "  " << f.prompt_id << ": " << f.message << "\n";
  }
  if (report_error) os << "report: FAILED " << *report_error << "\n";
  else if (!reports.empty()) os << "report: " << reports.size() << " experiments\n";
  return os.str();
}

GridResult run_grid(std::span<const ExperimentSpec> specs, const std::vector<Prompt>& prompts,
                    const std::map<std::string, std::string>& raw,
                    const defenses::DefenseClients& clients, const GridOptions& options) {
  GridResult result;
  for (auto spec : specs) {
    if (options.seed) spec.seed = *options.seed;
    ExperimentOutcome outcome;
    outcome.experiment_id = spec.id;
    const auto dir = options.out_dir / spec.id;
    outcome.defended_path = dir / "defended.jsonl";
    outcome.training_path = dir / "train.jsonl";
    try {
      auto corpus = defenses::defend_corpus(prompts, raw, spec, clients, options.jobs);
      defenses::write_defended(outcome.defended_path, corpus.rows);
      defenses::write_training_set(outcome.training_path, prompts, corpus.rows);
      outcome.rows = corpus.rows.size();
      for (const auto& r : corpus.rows) outcome.poisoned += r.poisoned ? 1 : 0;
      outcome.failures = std::move(corpus.failures);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    result.experiments.push_back(std::move(outcome));
  }

  if (options.scores) {
    try {
      result.reports = metrics::build_reports(metrics::read_score_tables(*options.scores));
      result.report_paths =
          metrics::write_report_dir(options.out_dir / "report", result.reports).paths;
    } catch (const std::exception& e) {
      result.report_error = e.what();
    }
  }
  return result;
}

}  // namespace apiward::harness
