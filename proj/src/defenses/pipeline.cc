#include "apiward/defenses/pipeline.h"

#include <optional>

#include "apiward/core/config.h"
#include "apiward/core/parallel.h"
#include "apiward/core/errors.h"
#include "apiward/core/manifest.h"
#include "apiward/core/seed.h"
#include "apiward/defenses/transforms.h"

namespace apiward::defenses {

namespace {

std::string pipeline_label(std::span<const DefenseConfig> defenses) {
  if (defenses.empty()) return "none";
  std::string out;
  for (const auto& d : defenses) {
    if (!out.empty()) out += "+";
    out += d.label();
  }
  return out;
}

}  // namespace

DefendedResponse apply_pipeline(const Exchange& exchange, std::span<const DefenseConfig> defenses,
                                std::uint64_t global_seed, const DefenseClients& clients,
                                std::string defense_id) {
  const auto& id = exchange.prompt.id;
  for (const auto& d : defenses) {
    if (auto problems = validate_defense(d); !problems.empty()) throw ConfigError(problems);
  }

  DefendedResponse out;
  out.prompt_id = id;
  out.defenses_applied.assign(defenses.begin(), defenses.end());
  out.defense_id = defense_id.empty() ? pipeline_label(defenses) : std::move(defense_id);
  out.text = exchange.teacher_text;

  const Tokenizer& tokenizer = clients.tokenizer ? *clients.tokenizer : default_tokenizer();
  std::optional<double> draw;

  try {
    for (const auto& d : defenses) {
      switch (d.kind) {
        case DefenseKind::kNone:
          break;
        case DefenseKind::kParaphrase:
          if (*d.alpha == 0.0) break;
          if (!clients.paraphraser) throw TransformError(id, "no paraphraser client configured");
          out.text = paraphrase(out.text, *d.alpha, *clients.paraphraser, clients.paraphraser_params);
          break;
        case DefenseKind::kPoison:
          if (!draw) draw = unit_interval(derive_seed(global_seed, id));
          if (*draw < *d.poison_rate) {
            if (!clients.teacher) throw TransformError(id, "no teacher client configured");
            out.text = corrupt(exchange.prompt, *clients.teacher, clients.teacher_params);
            out.poisoned = true;
          }
          break;
        case DefenseKind::kCotRemoval:
          out.text = strip_cot(out.text, exchange.prompt.domain);
          break;
        case DefenseKind::kTokenLimit:
          out.text = truncate_tokens(out.text, *d.max_tokens, tokenizer);
          break;
      }
    }
  } catch (const TransformError&) {
    throw;
  } catch (const std::exception& e) {
    throw TransformError(id, e.what());
  }
  return out;
}

nlohmann::ordered_json to_record(const DefendedResponse& r) {
  nlohmann::ordered_json j;
  j["prompt_id"] = r.prompt_id;
  j["text"] = r.text;
  j["defense_id"] = r.defense_id;
  j["poisoned"] = r.poisoned;
  return j;
}

DefendedResponse defended_from_record(const nlohmann::json& j) {
  try {
    DefendedResponse r;
    r.prompt_id = j.at("prompt_id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.defense_id = j.at("defense_id").get<std::string>();
    r.poisoned = j.at("poisoned").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad defended record: ") + e.what());
  }
}

std::vector<DefendedResponse> read_defended(const std::filesystem::path& path) {
  std::vector<DefendedResponse> out;
  for_each_jsonl(path, [&](const nlohmann::json& j, int) { out.push_back(defended_from_record(j)); });
  return out;
}

void write_defended(const std::filesystem::path& path, const std::vector<DefendedResponse>& rows) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) lines.push_back(dump_line(to_record(r)));
  write_lines(path, lines);
}

void write_training_set(const std::filesystem::path& path, const std::vector<Prompt>& prompts,
                        const std::vector<DefendedResponse>& rows) {
  std::map<std::string_view, const Prompt*> by_id;
  for (const auto& p : prompts) by_id.emplace(p.id, &p);
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) {
    auto it = by_id.find(r.prompt_id);
    if (it == by_id.end()) throw Error("training row for unknown prompt " + r.prompt_id);
    nlohmann::ordered_json j;
    j["prompt"] = it->second->text;
    j["response"] = r.text;
    lines.push_back(dump_line(j));
  }
  write_lines(path, lines);
}

DefendedCorpus defend_corpus(const std::vector<Prompt>& prompts,
                             const std::map<std::string, std::string>& raw,
                             const ExperimentSpec& spec, const DefenseClients& clients, int jobs) {
  require_valid(spec);
  std::vector<std::optional<DefendedResponse>> results(prompts.size());
  std::vector<std::optional<std::string>> errors(prompts.size());

  auto work = [&](std::size_t i) {
    const auto& p = prompts[i];
    auto it = raw.find(p.id);
    if (it == raw.end()) {
      errors[i] = "no raw teacher response";
      return;
    }
    try {
      results[i] = apply_pipeline({p, it->second}, spec.defenses, spec.seed, clients, spec.id);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  parallel_for(prompts.size(), jobs, work);

  DefendedCorpus out;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (results[i]) {
      out.rows.push_back(std::move(*results[i]));
    } else {
      out.failures.push_back({prompts[i].id, errors[i].value_or("unknown failure")});
    }
  }
  return out;
}

}  // namespace apiward::defenses
