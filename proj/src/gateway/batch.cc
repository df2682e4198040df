#include "apiward/gateway/batch.h"

#include <atomic>
#include <optional>

#include "apiward/core/errors.h"
#include "apiward/core/manifest.h"
#include "apiward/core/parallel.h"

namespace apiward::gateway {

BatchResult batch_generate(const std::vector<Prompt>& prompts, defenses::UpstreamClient& teacher,
                           ResponseCache& cache, const std::string& model_id,
                           const GenerationParams& params, int jobs) {
  std::vector<std::optional<std::string>> texts(prompts.size());
  std::vector<std::string> errors(prompts.size());
  std::atomic<int> calls{0};
  std::atomic<int> hits{0};

  auto work = [&](std::size_t i) {
    const auto& p = prompts[i];
    try {
      bool hit = false;
      auto entry = cache.get_or_produce(
          cache_key(model_id, params, p.text),
          [&] {
            ++calls;
            return teacher.complete("", p.text, params);
          },
          &hit);
      if (hit) ++hits;
      texts[i] = std::move(entry.value);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  parallel_for(prompts.size(), jobs, work);
  cache.flush();

  BatchResult out;
  out.upstream_calls = calls.load();
  out.cache_hits = hits.load();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (texts[i]) {
      out.responses.push_back({prompts[i].id, std::move(*texts[i])});
    } else {
      out.failures.push_back({prompts[i].id, errors[i]});
    }
  }
  return out;
}

void write_raw_responses(const std::filesystem::path& path, const std::vector<RawResponse>& rows) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["prompt_id"] = r.prompt_id;
    j["text"] = r.text;
    lines.push_back(dump_line(j));
  }
  write_lines(path, lines);
}

std::map<std::string, std::string> read_raw_responses(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for_each_jsonl(path, [&](const nlohmann::json& j, int line) {
    if (!j.is_object() || !j.contains("prompt_id") || !j.contains("text") ||
        !j["prompt_id"].is_string() || !j["text"].is_string()) {
      throw ParseError(path.string() + ":" + std::to_string(line) +
                       ": expected {prompt_id, text} string fields");
    }
    if (!out.emplace(j["prompt_id"].get<std::string>(), j["text"].get<std::string>()).second) {
      throw ParseError(path.string() + ":" + std::to_string(line) + ": duplicate prompt_id");
    }
  });
  return out;
}

}  // namespace apiward::gateway
