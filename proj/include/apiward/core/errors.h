#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace apiward {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment/defense configuration. Carries every violation found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Malformed input file or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

// The teacher or paraphraser endpoint failed or timed out.
class UpstreamError : public Error {
 public:
  using Error::Error;
};

// A defense transform failed for one exchange.
class TransformError : public Error {
 public:
  TransformError(std::string prompt_id, const std::string& cause)
      : Error("defense failed for prompt '" + prompt_id + "': " + cause),
        prompt_id_(std::move(prompt_id)) {}
  const std::string& prompt_id() const { return prompt_id_; }

 private:
  std::string prompt_id_;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

// A metric is undefined for its inputs (zero baseline, missing benchmark).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace apiward
