#include "apiward/gateway/server.h"

#include <charconv>

#include <httplib.h>

#include "apiward/core/errors.h"

namespace apiward::gateway {

GatewayServer::GatewayServer(Gateway& gateway)
    : gateway_(gateway), server_(std::make_unique<httplib::Server>()) {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    int status = 500;
    auto body = gateway_.handle_chat_body(req.body, status);
    res.status = status;
    res.set_content(std::move(body), "application/json");
  });
}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void GatewayServer::listen(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  server_->listen_after_bind();
}

void GatewayServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::pair<std::string, int> parse_listen_address(const std::string& addr) {
  std::string host = "127.0.0.1";
  std::string port_text = addr;
  if (auto colon = addr.rfind(':'); colon != std::string::npos) {
    host = addr.substr(0, colon);
    port_text = addr.substr(colon + 1);
  }
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 ||
      port > 65535 || host.empty()) {
    throw ConfigError({"invalid listen address '" + addr + "' (expected host:port)"});
  }
  return {host, port};
}

}  // namespace apiward::gateway
