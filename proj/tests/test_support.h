#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#ifndef APIWARD_TEST_DATA
#define APIWARD_TEST_DATA "tests/data"
#endif

namespace apiward::testing {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(APIWARD_TEST_DATA) / rel;
}

// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> n{0};
    path_ = std::filesystem::temp_directory_path() /
            ("apiward-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

// Random prose mixing words, punctuation, newlines and runs of spaces.
inline std::string random_text(std::mt19937_64& rng, int words) {
  static const char* vocab[] = {"the", "answer", "is", "x", "=", "42", "(", ")", "\\boxed{7}",
                                "def", "f", ":", "return", "naïve", "tokens", ",", ".", "##",
                                "a_b", "3.14", "λ", "if", "then", "-", "+"};
  static const char* seps[] = {" ", " ", " ", "  ", "\n", "\n\n", "\t", ""};
  std::uniform_int_distribution<std::size_t> w(0, std::size(vocab) - 1);
  std::uniform_int_distribution<std::size_t> s(0, std::size(seps) - 1);
  std::string out;
  if (rng() % 4 == 0) out += seps[s(rng)];
  for (int i = 0; i < words; ++i) {
    out += vocab[w(rng)];
    out += seps[s(rng)];
  }
  return out;
}

}  // namespace apiward::testing
