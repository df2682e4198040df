#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "apiward/core/types.h"
#include "apiward/defenses/tokenizer.h"
#include "apiward/defenses/upstream.h"

namespace apiward::defenses {

// Paraphraser system prompts for the three strength tiers.
inline constexpr std::string_view kParaphraseLight =
    "Lightly rephrase the following response, preserving all technical content, structure, "
    "and key phrases. Only change minor wording.";
inline constexpr std::string_view kParaphraseSubstantial =
    "Substantially rephrase the response. Change sentence structure, reorganize content, and "
    "use different vocabulary while preserving correctness.";
inline constexpr std::string_view kParaphraseComplete =
    "Completely rewrite the response in your own words. You may reorganize, restructure, and "
    "rephrase freely as long as the answer remains correct.";

// Adversarial system prompt used to produce poisoned responses.
inline constexpr std::string_view kCorruptionPrompt =
    "Solve the following problem, but deliberately arrive at an incorrect answer. Make your "
    "solution look plausible and well-reasoned, but ensure the final answer is wrong.";

// Snaps alpha in (0,1] to the nearest tier {0.3, 0.7, 1.0}, ties upward.
// Returns 0 for alpha == 0. Throws ConfigError outside [0,1].
double paraphrase_tier(double alpha);
std::string_view paraphrase_system_prompt(double alpha);

// alpha == 0 returns the response untouched without calling the paraphraser.
std::string paraphrase(std::string_view response, double alpha, UpstreamClient& paraphraser,
                       const GenerationParams& params = {});

// Threshold test of unit_interval(derive_seed(seed, id)) < rate. Monotone in
// rate and independent of prompt order.
bool poison_decision(std::string_view prompt_id, std::uint64_t global_seed, double rate);

// Re-queries the teacher with kCorruptionPrompt for a deliberately wrong answer.
std::string corrupt(const Prompt& prompt, UpstreamClient& teacher,
                    const GenerationParams& params = {});

// One extraction step over a math response. Marker precedence: last
// \boxed{...}, then the last "the answer is" (case-insensitive), then the
// text after the last '=', then the last nonempty line.
std::string extract_math_answer_once(std::string_view response);
// Repeats extract_math_answer_once to a fixed point, so the result is stable
// under re-extraction.
std::string extract_math_answer(std::string_view response);

// First fenced code block with comments and docstrings removed.
std::string extract_code(std::string_view response);

// Concluding paragraph (paragraphs are separated by blank lines).
std::string last_paragraph(std::string_view response);

std::string last_nonempty_line(std::string_view response);

// Chain-of-thought removal. Never returns an empty string for a response
// that has any non-whitespace content.
std::string strip_cot(std::string_view response, Domain domain);

// Keeps the first `limit` tokens. Identity when the response is already
// within the limit. Throws ConfigError for limit < 1.
std::string truncate_tokens(std::string_view response, int limit, const Tokenizer& tokenizer);

}  // namespace apiward::defenses
