#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "apiward/core/types.h"
#include "apiward/defenses/tokenizer.h"
#include "apiward/defenses/upstream.h"

namespace apiward::defenses {

// A prompt together with its raw (undefended) teacher response.
struct Exchange {
  Prompt prompt;
  std::string teacher_text;
};

// Collaborators the transforms may need. Unused ones may be null; a defense
// that needs a missing client fails its exchange.
struct DefenseClients {
  UpstreamClient* teacher = nullptr;
  UpstreamClient* paraphraser = nullptr;
  const Tokenizer* tokenizer = nullptr;  // null -> default_tokenizer()
  GenerationParams teacher_params;
  GenerationParams paraphraser_params;
};

// Applies `defenses` in order to the running text. The poison draw is made
// once per exchange from derive_seed(global_seed, prompt id), and a poisoned
// exchange has its text replaced by the teacher's adversarial completion.
// Any failure is rethrown as TransformError naming the prompt.
DefendedResponse apply_pipeline(const Exchange& exchange, std::span<const DefenseConfig> defenses,
                                std::uint64_t global_seed, const DefenseClients& clients,
                                std::string defense_id = {});

// Defended-output record: {prompt_id, text, defense_id, poisoned}.
nlohmann::ordered_json to_record(const DefendedResponse& r);
DefendedResponse defended_from_record(const nlohmann::json& j);
std::vector<DefendedResponse> read_defended(const std::filesystem::path& path);
void write_defended(const std::filesystem::path& path, const std::vector<DefendedResponse>& rows);

// Training-set record: {prompt, response}.
void write_training_set(const std::filesystem::path& path, const std::vector<Prompt>& prompts,
                        const std::vector<DefendedResponse>& rows);

struct CorpusFailure {
  std::string prompt_id;
  std::string message;
};

struct DefendedCorpus {
  std::vector<DefendedResponse> rows;  // manifest order; failed prompts omitted
  std::vector<CorpusFailure> failures;
};

// Defends every prompt of `prompts` whose raw response is in `raw`
// (prompt id -> text). Prompts without a raw response are failures.
// Exchanges share no state, so `jobs` > 1 runs them in parallel with
// identical output.
DefendedCorpus defend_corpus(const std::vector<Prompt>& prompts,
                             const std::map<std::string, std::string>& raw,
                             const ExperimentSpec& spec, const DefenseClients& clients,
                             int jobs = 1);

}  // namespace apiward::defenses
