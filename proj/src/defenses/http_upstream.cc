#include <httplib.h>

#include <json.hpp>

#include "apiward/core/errors.h"
#include "apiward/defenses/upstream.h"

namespace apiward::defenses {

HttpUpstreamClient::HttpUpstreamClient(HttpUpstreamOptions options)
    : options_(std::move(options)) {
  if (options_.base_url.empty()) throw ConfigError({"upstream base URL is empty"});
}

std::string HttpUpstreamClient::complete(std::string_view system_prompt,
                                         std::string_view user_text,
                                         const GenerationParams& params) {
  nlohmann::ordered_json body;
  body["model"] = options_.model;
  body["messages"] = nlohmann::ordered_json::array();
  if (!system_prompt.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", system_prompt}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", user_text}});
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;

  httplib::Client client(options_.base_url);
  const auto secs = static_cast<time_t>(options_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }

  auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    throw UpstreamError("upstream " + options_.base_url +
                        " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw UpstreamError("upstream " + options_.base_url + " returned HTTP " +
                        std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw UpstreamError("malformed upstream response: " + std::string(e.what()));
  }
}

}  // namespace apiward::defenses
