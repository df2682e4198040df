#include "apiward/harness/sandbox_client.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>

#include "apiward/core/manifest.h"
#include "apiward/core/parallel.h"

namespace apiward::harness {

std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::kPass: return "pass";
    case ExecStatus::kFail: return "fail";
    case ExecStatus::kTimeout: return "timeout";
    case ExecStatus::kError: return "error";
  }
  return "error";
}

nlohmann::ordered_json to_json(const ExecRequest& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["candidate"] = r.candidate;
  j["entry_point"] = r.entry_point;
  j["tests"] = r.tests;
  j["time_limit_ms"] = r.time_limit_ms;
  return j;
}

ExecVerdict verdict_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("status") ||
      !j["status"].is_string()) {
    throw SandboxError("malformed sandbox verdict: " + j.dump());
  }
  ExecVerdict v;
  v.id = j["id"].get<std::string>();
  const auto status = j["status"].get<std::string>();
  if (status == "pass") v.status = ExecStatus::kPass;
  else if (status == "fail") v.status = ExecStatus::kFail;
  else if (status == "timeout") v.status = ExecStatus::kTimeout;
  else if (status == "error") v.status = ExecStatus::kError;
  else throw SandboxError("unknown sandbox status '" + status + "'");
  if (auto it = j.find("detail"); it != j.end() && it->is_string()) v.detail = it->get<std::string>();
  return v;
}

namespace {

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw SandboxError(std::string("sandbox write failed: ") + std::strerror(errno));
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string StreamSandboxClient::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      auto line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw SandboxError("sandbox did not answer in time");
    pollfd p{read_fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw SandboxError(std::string("sandbox poll failed: ") + std::strerror(errno));
    if (r == 0) continue;
    char chunk[4096];
    const auto n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw SandboxError("sandbox closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ExecVerdict StreamSandboxClient::execute(const ExecRequest& request) {
  std::lock_guard lock(mu_);
  if (read_fd_ < 0 || write_fd_ < 0) throw SandboxError("sandbox not connected");
  write_all(write_fd_, dump_line(to_json(request)) + "\n");
  const auto line = read_line(std::chrono::milliseconds(request.time_limit_ms) + grace_);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw SandboxError("sandbox sent a non-JSON line: " + line);
  }
  auto v = verdict_from_json(j);
  if (v.id != request.id) {
    throw SandboxError("sandbox answered '" + v.id + "' for request '" + request.id + "'");
  }
  return v;
}

ProcessSandboxClient::ProcessSandboxClient(const std::string& command) {
  ignore_sigpipe();
  int in[2], out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw SandboxError("pipe failed");
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw SandboxError("pipe failed");
  }
  pid_ = ::fork();
  if (pid_ < 0) throw SandboxError("fork failed");
  if (pid_ == 0) {
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::close(in[0]);
    ::close(in[1]);
    ::close(out[0]);
    ::close(out[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  to_child_ = in[1];
  from_child_ = out[0];
  set_fds(from_child_, to_child_);
}

ProcessSandboxClient::~ProcessSandboxClient() {
  if (to_child_ >= 0) ::close(to_child_);  // EOF asks the sandbox to exit
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      ::usleep(10'000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
}

SocketSandboxClient::SocketSandboxClient(const std::string& path) {
  ignore_sigpipe();
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof addr.sun_path) throw SandboxError("socket path too long: " + path);
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw SandboxError("socket failed");
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw SandboxError("cannot reach sandbox at " + path + ": " + why);
  }
  set_fds(fd_, fd_);
}

SocketSandboxClient::~SocketSandboxClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<SandboxClient> connect_sandbox(const std::string& endpoint) {
  if (endpoint.starts_with("exec:") && endpoint.size() > 5) {
    return std::make_unique<ProcessSandboxClient>(endpoint.substr(5));
  }
  if (endpoint.starts_with("unix:") && endpoint.size() > 5) {
    return std::make_unique<SocketSandboxClient>(endpoint.substr(5));
  }
  throw ConfigError({"sandbox endpoint must be 'exec:<command>' or 'unix:<path>', got '" +
                     endpoint + "'"});
}

std::string candidate_source(std::string_view prediction) {
  const auto open = prediction.find("```");
  if (open == std::string_view::npos) return std::string(prediction);
  const auto body = prediction.find('\n', open);
  if (body == std::string_view::npos) return std::string(prediction);
  const auto close = prediction.find("```", body + 1);
  return std::string(prediction.substr(body + 1, close == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : close - body - 1));
}

namespace {

// Lends out one of a fixed set of connections per call.
class CodeScorer final : public Scorer {
 public:
  CodeScorer(std::vector<std::unique_ptr<SandboxClient>> clients, int time_limit_ms)
      : clients_(std::move(clients)), time_limit_ms_(time_limit_ms) {
    for (auto& c : clients_) idle_.push_back(c.get());
  }

  Verdict score(std::string_view prediction, const ReferenceSpec& reference) const override {
    const auto* tests = std::get_if<CodeTests>(&reference.payload);
    if (!tests) throw Error("code scorer needs a test-bundle reference");
    ExecRequest req{std::to_string(counter_++), candidate_source(prediction), tests->entry_point,
                    tests->tests, time_limit_ms_};
    SandboxClient* client = acquire();
    ExecVerdict v;
    try {
      v = client->execute(req);
    } catch (...) {
      release(client);
      throw;
    }
    release(client);
    switch (v.status) {
      case ExecStatus::kPass: return Verdict::pass();
      case ExecStatus::kTimeout: return Verdict::fail("timeout");
      case ExecStatus::kFail: return Verdict::fail(v.detail.empty() ? "fail" : v.detail);
      case ExecStatus::kError: return Verdict::fail("error: " + v.detail);
    }
    return Verdict::fail();
  }

 private:
  SandboxClient* acquire() const {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !idle_.empty(); });
    auto* c = idle_.front();
    idle_.pop_front();
    return c;
  }
  void release(SandboxClient* c) const {
    {
      std::lock_guard lock(mu_);
      idle_.push_back(c);
    }
    cv_.notify_one();
  }

  std::vector<std::unique_ptr<SandboxClient>> clients_;
  int time_limit_ms_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable std::deque<SandboxClient*> idle_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

}  // namespace

ScoreResult score_code(const Predictions& predictions, const References& references,
                       const std::string& sandbox_endpoint, const CodeScoringOptions& options) {
  if (options.time_limit_ms < kMinTimeLimitMs) {
    throw ConfigError({"time limit must be at least " + std::to_string(kMinTimeLimitMs) + " ms"});
  }
  const int n = std::max(1, options.in_flight);
  std::vector<std::unique_ptr<SandboxClient>> clients;
  for (int i = 0; i < n; ++i) clients.push_back(connect_sandbox(sandbox_endpoint));
  CodeScorer scorer(std::move(clients), options.time_limit_ms);
  return score_outputs(predictions, references, scorer, n);
}

}  // namespace apiward::harness
