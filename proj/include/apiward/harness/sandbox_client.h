#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "apiward/core/errors.h"
#include "apiward/harness/scoring.h"

namespace apiward::harness {

// The code sandbox cannot be reached or broke the protocol.
class SandboxError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kDefaultTimeLimitMs = 10'000;
inline constexpr int kMinTimeLimitMs = 100;

struct ExecRequest {
  std::string id;
  std::string candidate;
  std::string entry_point;
  std::string tests;
  int time_limit_ms = kDefaultTimeLimitMs;
};

enum class ExecStatus { kPass, kFail, kTimeout, kError };

std::string_view to_string(ExecStatus s);

struct ExecVerdict {
  std::string id;
  ExecStatus status = ExecStatus::kError;
  std::string detail;
};

// Wire form: one JSON record per line, field names as in the structs.
nlohmann::ordered_json to_json(const ExecRequest& r);
ExecVerdict verdict_from_json(const nlohmann::json& j);

class SandboxClient {
 public:
  virtual ~SandboxClient() = default;
  // Throws SandboxError on transport failure; execution outcomes, timeouts
  // included, come back as verdicts.
  virtual ExecVerdict execute(const ExecRequest& request) = 0;
};

// Speaks the line protocol over a file-descriptor pair. One request at a
// time; the sandbox answers in order.
class StreamSandboxClient : public SandboxClient {
 public:
  ExecVerdict execute(const ExecRequest& request) override;

 protected:
  StreamSandboxClient() = default;
  void set_fds(int read_fd, int write_fd) {
    read_fd_ = read_fd;
    write_fd_ = write_fd;
  }
  // Extra wall-clock allowance over the request's own limit before the
  // sandbox is declared hung.
  std::chrono::milliseconds grace_{5000};

 private:
  std::string read_line(std::chrono::milliseconds timeout);

  std::mutex mu_;
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::string buffer_;
};

// Runs `command` under /bin/sh and talks to its stdin/stdout.
class ProcessSandboxClient final : public StreamSandboxClient {
 public:
  explicit ProcessSandboxClient(const std::string& command);
  ~ProcessSandboxClient() override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

// Connects to a sandbox listening on a unix-domain socket.
class SocketSandboxClient final : public StreamSandboxClient {
 public:
  explicit SocketSandboxClient(const std::string& path);
  ~SocketSandboxClient() override;

 private:
  int fd_ = -1;
};

// "exec:<shell command>" or "unix:<socket path>". Throws SandboxError when
// the endpoint cannot be reached, ConfigError when it is malformed.
std::unique_ptr<SandboxClient> connect_sandbox(const std::string& endpoint);

// The code to execute: the first fenced block of the prediction when there
// is one, else the prediction as is.
std::string candidate_source(std::string_view prediction);

struct CodeScoringOptions {
  int time_limit_ms = kDefaultTimeLimitMs;
  int in_flight = 1;  // sandbox connections used concurrently
};

// Pass iff the sandbox reports pass; timeouts fail with cause "timeout".
// Never scores an unreachable sandbox as zero: throws SandboxError instead.
ScoreResult score_code(const Predictions& predictions, const References& references,
                       const std::string& sandbox_endpoint, const CodeScoringOptions& options = {});

}  // namespace apiward::harness
