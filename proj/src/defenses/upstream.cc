#include "apiward/defenses/upstream.h"

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "apiward/core/digest.h"
#include "apiward/core/errors.h"

namespace apiward::defenses {

std::string request_digest(std::string_view system_prompt, std::string_view user_text,
                           const GenerationParams& params) {
  std::string canon;
  append_field(canon, "system", system_prompt);
  append_field(canon, "user", user_text);
  canon += "temperature=" + canonical_real(params.temperature) + "\n";
  canon += "max_tokens=" + std::to_string(params.max_tokens) + "\n";
  return sha256_hex(canon);
}

MockClient::MockClient(std::map<std::string, std::string> fixtures, Fallback fallback)
    : fixtures_(std::move(fixtures)), fallback_(fallback) {}

std::map<std::string, std::string> MockClient::load_fixtures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mock fixtures " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": expected an object of digest -> text");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ParseError(path.string() + ": value for " + k + " is not a string");
    out.emplace(k, v.get<std::string>());
  }
  return out;
}

void MockClient::add(std::string_view system_prompt, std::string_view user_text,
                     const GenerationParams& params, std::string completion) {
  std::lock_guard lock(mu_);
  fixtures_[request_digest(system_prompt, user_text, params)] = std::move(completion);
}

std::string MockClient::complete(std::string_view system_prompt, std::string_view user_text,
                                 const GenerationParams& params) {
  const auto digest = request_digest(system_prompt, user_text, params);
  {
    std::lock_guard lock(mu_);
    if (auto it = fixtures_.find(digest); it != fixtures_.end()) return it->second;
  }
  if (fallback_ == Fallback::kEcho) {
    return "[mock " + digest.substr(0, 12) + "] " + std::string(user_text);
  }
  throw UpstreamError("mock upstream has no fixture for request " + digest);
}

std::string CountingClient::complete(std::string_view system_prompt, std::string_view user_text,
                                     const GenerationParams& params) {
  ++calls_;
  {
    std::lock_guard lock(mu_);
    system_prompts_.emplace_back(system_prompt);
  }
  return inner_.complete(system_prompt, user_text, params);
}

std::vector<std::string> CountingClient::system_prompts() const {
  std::lock_guard lock(mu_);
  return system_prompts_;
}

std::optional<HttpUpstreamOptions> upstream_options_from_env(std::string_view prefix) {
  auto get = [&](const char* suffix) -> std::string {
    const std::string name = std::string(prefix) + suffix;
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
  };
  HttpUpstreamOptions o;
  o.base_url = get("_BASE_URL");
  if (o.base_url.empty()) return std::nullopt;
  o.api_key = get("_API_KEY");
  o.model = get("_MODEL");
  return o;
}

}  // namespace apiward::defenses
