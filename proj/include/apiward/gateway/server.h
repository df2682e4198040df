#pragma once

#include <memory>
#include <string>
#include <thread>

#include "apiward/gateway/gateway.h"

namespace httplib {
class Server;
}

namespace apiward::gateway {

// HTTP front end: POST /v1/chat/completions and GET /healthz.
class GatewayServer {
 public:
  explicit GatewayServer(Gateway& gateway);
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  // Binds host:port (port 0 picks a free one) and serves on a background
  // thread. Returns the bound port. Throws Error on bind failure.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread until stop() is called.
  void listen(const std::string& host, int port);
  void stop();

 private:
  Gateway& gateway_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

// Splits "host:port"; a bare port binds 127.0.0.1. Throws ConfigError.
std::pair<std::string, int> parse_listen_address(const std::string& addr);

}  // namespace apiward::gateway
