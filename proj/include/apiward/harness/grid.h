#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apiward/core/types.h"
#include "apiward/defenses/pipeline.h"
#include "apiward/metrics/metrics.h"

namespace apiward::harness {

struct GridOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides each spec's seed when set
  int jobs = 1;                       // per-experiment parallelism over prompts
  std::optional<std::filesystem::path> scores;  // score file or directory
};

struct ExperimentOutcome {
  std::string experiment_id;
  std::filesystem::path defended_path;  // <out>/<id>/defended.jsonl
  std::filesystem::path training_path;  // <out>/<id>/train.jsonl
  std::size_t rows = 0;
  std::size_t poisoned = 0;
  std::vector<defenses::CorpusFailure> failures;
  std::optional<std::string> error;  // the experiment as a whole failed
};

struct GridResult {
  std::vector<ExperimentOutcome> experiments;
  std::vector<metrics::MetricsReport> reports;
  std::vector<std::filesystem::path> report_paths;  // <out>/report/*
  std::optional<std::string> report_error;

  bool ok() const;
  std::string summary() const;
};

// Defends the cached teacher outputs once per experiment, in order, and
// writes each defended set and training set. One experiment failing does not
// stop the others. With score inputs, also builds the metric reports.
GridResult run_grid(std::span<const ExperimentSpec> specs, const std::vector<Prompt>& prompts,
                    const std::map<std::string, std::string>& raw,
                    const defenses::DefenseClients& clients, const GridOptions& options);

}  // namespace apiward::harness
