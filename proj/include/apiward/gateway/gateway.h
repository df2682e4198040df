#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "apiward/core/errors.h"
#include "apiward/core/types.h"
#include "apiward/defenses/tokenizer.h"
#include "apiward/defenses/upstream.h"
#include "apiward/gateway/cache.h"

namespace apiward::gateway {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

// Minimal OpenAI-compatible request. `domain` and `prompt_id` are optional
// extension fields; when absent they are looked up in the gateway's prompt
// manifest by user text.
struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 4096;
  std::optional<Domain> domain;
  std::optional<std::string> prompt_id;
};

struct ChatResponse {
  std::string id;
  std::string model;
  std::int64_t created = 0;  // creation time of the cached teacher response
  std::string content;
  std::string defense_id;
};

// Carries the HTTP status the service maps an error to.
class GatewayError : public Error {
 public:
  GatewayError(int status, std::string type, const std::string& message,
               std::string correlation_id = {})
      : Error(message),
        status_(status),
        type_(std::move(type)),
        correlation_id_(std::move(correlation_id)) {}

  int status() const { return status_; }
  const std::string& type() const { return type_; }
  const std::string& correlation_id() const { return correlation_id_; }

 private:
  int status_;
  std::string type_;
  std::string correlation_id_;
};

// Throws GatewayError(400) on malformed bodies or invalid requests.
ChatRequest parse_chat_request(std::string_view body);
nlohmann::ordered_json to_json(const ChatResponse& r);
nlohmann::ordered_json to_json(const GatewayError& e);

// Text identity of a conversation for caching. A lone user message is its
// content verbatim, which matches how batch generation keys manifest prompts.
std::string conversation_text(const std::vector<ChatMessage>& messages);

struct GatewayConfig {
  std::string teacher_model;
  ExperimentSpec experiment;  // defense pipeline, id and seed
  std::vector<Prompt> known_prompts;
  GenerationParams paraphraser_params;
};

// The protected API: cache-backed teacher generation, then the defense
// pipeline, then return. Poison flags never leave the gateway.
class Gateway {
 public:
  Gateway(GatewayConfig config, defenses::UpstreamClient& teacher,
          defenses::UpstreamClient* paraphraser, ResponseCache& cache,
          const defenses::Tokenizer* tokenizer = nullptr);

  // Throws GatewayError: 400 invalid request, 502 upstream failure,
  // 500 defense or storage failure (with a correlation id).
  ChatResponse handle_chat(const ChatRequest& request);

  // Full wire round trip: returns the JSON body and sets `status`.
  std::string handle_chat_body(std::string_view body, int& status);

  const GatewayConfig& config() const { return config_; }

 private:
  GatewayConfig config_;
  defenses::UpstreamClient& teacher_;
  defenses::UpstreamClient* paraphraser_;
  ResponseCache& cache_;
  const defenses::Tokenizer* tokenizer_;
  std::map<std::string, const Prompt*> prompts_by_text_;
};

}  // namespace apiward::gateway
