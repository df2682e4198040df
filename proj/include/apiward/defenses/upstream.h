#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "apiward/core/types.h"

namespace apiward::defenses {

// A chat-completion endpoint: the teacher or the paraphraser.
// Implementations must be safe for concurrent use. Failures throw UpstreamError.
class UpstreamClient {
 public:
  virtual ~UpstreamClient() = default;
  virtual std::string complete(std::string_view system_prompt, std::string_view user_text,
                               const GenerationParams& params) = 0;
};

// SHA-256 hex over the canonical form of one completion request. Keys the
// mock fixture files.
std::string request_digest(std::string_view system_prompt, std::string_view user_text,
                           const GenerationParams& params);

// Serves canned completions keyed by request_digest().
class MockClient final : public UpstreamClient {
 public:
  enum class Fallback {
    kError,  // unknown digest -> UpstreamError
    kEcho,   // unknown digest -> "[mock <digest prefix>] <user text>"
  };

  explicit MockClient(std::map<std::string, std::string> fixtures = {},
                      Fallback fallback = Fallback::kError);

  // Fixture file: a JSON object mapping request digest to completion text.
  static std::map<std::string, std::string> load_fixtures(const std::filesystem::path& path);

  void add(std::string_view system_prompt, std::string_view user_text,
           const GenerationParams& params, std::string completion);

  std::string complete(std::string_view system_prompt, std::string_view user_text,
                       const GenerationParams& params) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::string> fixtures_;
  Fallback fallback_;
};

// Wraps another client, counting calls and remembering system prompts.
class CountingClient final : public UpstreamClient {
 public:
  explicit CountingClient(UpstreamClient& inner) : inner_(inner) {}

  std::string complete(std::string_view system_prompt, std::string_view user_text,
                       const GenerationParams& params) override;

  int calls() const { return calls_.load(); }
  std::vector<std::string> system_prompts() const;

 private:
  UpstreamClient& inner_;
  std::atomic<int> calls_{0};
  mutable std::mutex mu_;
  std::vector<std::string> system_prompts_;
};

// Adapts a plain function; handy for tests and for failure injection.
class FunctionClient final : public UpstreamClient {
 public:
  using Fn = std::function<std::string(std::string_view, std::string_view, const GenerationParams&)>;
  explicit FunctionClient(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(std::string_view system_prompt, std::string_view user_text,
                       const GenerationParams& params) override {
    return fn_(system_prompt, user_text, params);
  }

 private:
  Fn fn_;
};

struct HttpUpstreamOptions {
  std::string base_url;  // e.g. "http://127.0.0.1:8000" or "https://api.example.com"
  std::string api_key;   // sent as a bearer token when nonempty
  std::string model;
  std::chrono::seconds timeout{600};
};

// OpenAI-compatible POST {base_url}/v1/chat/completions client.
class HttpUpstreamClient final : public UpstreamClient {
 public:
  explicit HttpUpstreamClient(HttpUpstreamOptions options);

  std::string complete(std::string_view system_prompt, std::string_view user_text,
                       const GenerationParams& params) override;

  const HttpUpstreamOptions& options() const { return options_; }

 private:
  HttpUpstreamOptions options_;
};

// Reads {PREFIX}_BASE_URL, {PREFIX}_API_KEY and {PREFIX}_MODEL. Returns
// nullopt when the base URL is unset.
std::optional<HttpUpstreamOptions> upstream_options_from_env(std::string_view prefix);

}  // namespace apiward::defenses
