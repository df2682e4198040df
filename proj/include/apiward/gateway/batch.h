#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "apiward/core/types.h"
#include "apiward/defenses/pipeline.h"
#include "apiward/defenses/upstream.h"
#include "apiward/gateway/cache.h"

namespace apiward::gateway {

struct RawResponse {
  std::string prompt_id;
  std::string text;
};

struct BatchResult {
  std::vector<RawResponse> responses;  // manifest order; failed prompts omitted
  std::vector<defenses::CorpusFailure> failures;
  int upstream_calls = 0;
  int cache_hits = 0;
};

// Teacher generation for a whole manifest. Every response goes through the
// cache, so a rerun makes no upstream calls and prompts sharing text share
// one generation.
BatchResult batch_generate(const std::vector<Prompt>& prompts, defenses::UpstreamClient& teacher,
                           ResponseCache& cache, const std::string& model_id,
                           const GenerationParams& params = {}, int jobs = 1);

// Raw-response file: one {prompt_id, text} record per line.
void write_raw_responses(const std::filesystem::path& path, const std::vector<RawResponse>& rows);
std::map<std::string, std::string> read_raw_responses(const std::filesystem::path& path);

}  // namespace apiward::gateway
