#include "apiward/gateway/gateway.h"

#include <cmath>
#include <iostream>
#include <mutex>
#include <random>

#include "apiward/core/config.h"
#include "apiward/core/digest.h"
#include "apiward/defenses/pipeline.h"

namespace apiward::gateway {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string new_correlation_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

GatewayError bad_request(const std::string& message) {
  return GatewayError(400, "invalid_request_error", message);
}

// Teacher re-queries made by the defenses (poisoning) go through the cache
// too, keyed by the full system+user conversation, so a repeated request
// costs no upstream call whichever branch it takes.
class CachedTeacher final : public defenses::UpstreamClient {
 public:
  CachedTeacher(defenses::UpstreamClient& inner, ResponseCache& cache, const std::string& model)
      : inner_(inner), cache_(cache), model_(model) {}

  std::string complete(std::string_view system_prompt, std::string_view user_text,
                       const GenerationParams& params) override {
    const std::vector<ChatMessage> convo = {{"system", std::string(system_prompt)},
                                            {"user", std::string(user_text)}};
    const auto key = cache_key(model_, params, conversation_text(convo));
    return cache_
        .get_or_produce(key, [&] { return inner_.complete(system_prompt, user_text, params); })
        .value;
  }

 private:
  defenses::UpstreamClient& inner_;
  ResponseCache& cache_;
  const std::string& model_;
};

}  // namespace

ChatRequest parse_chat_request(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw bad_request(std::string("request body is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw bad_request("request body must be a JSON object");

  ChatRequest r;
  if (auto it = j.find("model"); it != j.end()) {
    if (!it->is_string()) throw bad_request("'model' must be a string");
    r.model = it->get<std::string>();
  }
  auto msgs = j.find("messages");
  if (msgs == j.end() || !msgs->is_array() || msgs->empty()) {
    throw bad_request("'messages' must be a nonempty array");
  }
  bool has_user = false;
  for (const auto& m : *msgs) {
    if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
        !m["role"].is_string() || !m["content"].is_string()) {
      throw bad_request("each message needs string 'role' and 'content'");
    }
    ChatMessage msg{m["role"].get<std::string>(), m["content"].get<std::string>()};
    if (msg.role != "system" && msg.role != "user" && msg.role != "assistant") {
      throw bad_request("unsupported message role '" + msg.role + "'");
    }
    has_user |= msg.role == "user";
    r.messages.push_back(std::move(msg));
  }
  if (!has_user) throw bad_request("at least one user message is required");

  if (auto it = j.find("temperature"); it != j.end() && !it->is_null()) {
    if (!it->is_number() || !std::isfinite(it->get<double>()) || it->get<double>() < 0) {
      throw bad_request("'temperature' must be a non-negative number");
    }
    r.temperature = it->get<double>();
  }
  if (auto it = j.find("max_tokens"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 1 ||
        it->get<long long>() > 1'000'000) {
      throw bad_request("'max_tokens' must be a positive integer");
    }
    r.max_tokens = it->get<int>();
  }
  if (auto it = j.find("n"); it != j.end() && !it->is_null() &&
                             (!it->is_number_integer() || it->get<int>() != 1)) {
    throw bad_request("only n = 1 is supported");
  }
  if (auto it = j.find("stream"); it != j.end() && it->is_boolean() && it->get<bool>()) {
    throw bad_request("streaming is not supported");
  }
  if (auto it = j.find("domain"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw bad_request("'domain' must be a string");
    try {
      r.domain = parse_domain(it->get<std::string>());
    } catch (const ParseError& e) {
      throw bad_request(e.what());
    }
  }
  if (auto it = j.find("prompt_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string() || it->get<std::string>().empty()) {
      throw bad_request("'prompt_id' must be a nonempty string");
    }
    r.prompt_id = it->get<std::string>();
  }
  return r;
}

ordered_json to_json(const ChatResponse& r) {
  ordered_json j;
  j["id"] = r.id;
  j["object"] = "chat.completion";
  j["created"] = r.created;
  j["model"] = r.model;
  ordered_json choice;
  choice["index"] = 0;
  choice["message"] = {{"role", "assistant"}, {"content", r.content}};
  choice["finish_reason"] = "stop";
  j["choices"] = ordered_json::array({choice});
  j["defense_id"] = r.defense_id;
  return j;
}

ordered_json to_json(const GatewayError& e) {
  ordered_json err;
  err["message"] = e.what();
  err["type"] = e.type();
  err["code"] = e.status();
  if (!e.correlation_id().empty()) err["correlation_id"] = e.correlation_id();
  ordered_json j;
  j["error"] = std::move(err);
  return j;
}

std::string conversation_text(const std::vector<ChatMessage>& messages) {
  if (messages.size() == 1 && messages.front().role == "user") return messages.front().content;
  std::string out;
  for (const auto& m : messages) append_field(out, m.role, m.content);
  return out;
}

Gateway::Gateway(GatewayConfig config, defenses::UpstreamClient& teacher,
                 defenses::UpstreamClient* paraphraser, ResponseCache& cache,
                 const defenses::Tokenizer* tokenizer)
    : config_(std::move(config)),
      teacher_(teacher),
      paraphraser_(paraphraser),
      cache_(cache),
      tokenizer_(tokenizer) {
  require_valid(config_.experiment);
  for (const auto& p : config_.known_prompts) prompts_by_text_.emplace(p.text, &p);
}

ChatResponse Gateway::handle_chat(const ChatRequest& request) {
  bool has_user = false;
  for (const auto& m : request.messages) has_user |= m.role == "user";
  if (!has_user) throw bad_request("at least one user message is required");

  const GenerationParams params{request.temperature, request.max_tokens};
  std::string system_prompt;
  std::vector<ChatMessage> dialogue;
  for (const auto& m : request.messages) {
    if (m.role == "system") {
      if (!system_prompt.empty()) system_prompt += "\n\n";
      system_prompt += m.content;
    } else {
      dialogue.push_back(m);
    }
  }
  const std::string user_text = conversation_text(dialogue);
  const std::string key =
      cache_key(config_.teacher_model, params, conversation_text(request.messages));

  // Stage 1: generation, served from the cache when possible.
  CacheEntry entry;
  try {
    entry = cache_.get_or_produce(
        key, [&] { return teacher_.complete(system_prompt, user_text, params); });
  } catch (const UpstreamError& e) {
    throw GatewayError(502, "upstream_error", e.what(), new_correlation_id());
  } catch (const std::exception& e) {
    const auto cid = new_correlation_id();
    std::cerr << "[gateway] cache failure " << cid << ": " << e.what() << "\n";
    throw GatewayError(500, "cache_error", "response cache failure", cid);
  }

  // Stage 2: defense.
  Prompt prompt;
  prompt.text = user_text;
  const Prompt* known = nullptr;
  if (auto it = prompts_by_text_.find(user_text); it != prompts_by_text_.end()) known = it->second;
  prompt.id = request.prompt_id ? *request.prompt_id
              : known           ? known->id
                                : "req-" + key.substr(0, 16);
  prompt.domain = request.domain ? *request.domain : known ? known->domain : Domain::kOpenEnded;

  CachedTeacher cached_teacher(teacher_, cache_, config_.teacher_model);
  defenses::DefenseClients clients;
  clients.teacher = &cached_teacher;
  clients.paraphraser = paraphraser_;
  clients.tokenizer = tokenizer_;
  clients.teacher_params = params;
  clients.paraphraser_params = config_.paraphraser_params;

  DefendedResponse defended;
  try {
    defended = defenses::apply_pipeline({prompt, entry.value}, config_.experiment.defenses,
                                        config_.experiment.seed, clients, config_.experiment.id);
  } catch (const std::exception& e) {
    const auto cid = new_correlation_id();
    std::cerr << "[gateway] defense failure " << cid << ": " << e.what() << "\n";
    throw GatewayError(500, "defense_error", "defense pipeline failed", cid);
  }

  // Stage 3: return.
  ChatResponse out;
  out.id = "chatcmpl-" + key.substr(0, 24);
  out.model = request.model.empty() ? config_.teacher_model : request.model;
  out.created = entry.created_at;
  out.content = std::move(defended.text);
  out.defense_id = config_.experiment.id;
  return out;
}

std::string Gateway::handle_chat_body(std::string_view body, int& status) {
  try {
    const auto response = handle_chat(parse_chat_request(body));
    status = 200;
    return to_json(response).dump();
  } catch (const GatewayError& e) {
    status = e.status();
    return to_json(e).dump();
  } catch (const std::exception& e) {
    const GatewayError wrapped(500, "internal_error", e.what(), new_correlation_id());
    status = 500;
    return to_json(wrapped).dump();
  }
}

}  // namespace apiward::gateway
