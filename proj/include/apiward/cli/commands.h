#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace apiward::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitItemFailures = 1;
inline constexpr int kExitUsage = 2;

struct CommandOutcome {
  int exit_code = kExitOk;
  std::string summary;
  std::vector<std::filesystem::path> artifact_paths;
};

// Entry point of the `apiward` binary. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Asks a running `serve` to shut down, as SIGINT/SIGTERM do.
void request_shutdown();

}  // namespace apiward::cli
