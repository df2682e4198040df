#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "apiward/core/types.h"

namespace apiward::gateway {

// SHA-256 hex of the canonical (model, params, prompt) serialization. The
// defense configuration is deliberately not part of the key: every
// experiment shares one set of teacher outputs.
std::string cache_key(std::string_view model_id, const GenerationParams& params,
                      std::string_view prompt_text);

struct CacheEntry {
  std::string key;
  std::string value;        // raw, undefended teacher text
  std::int64_t created_at;  // unix seconds
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t writes = 0;
};

// Persistent teacher-response cache.
//
// Layout: <dir>/objects/<key> holds the raw response bytes, <dir>/index.json
// lists {key, created_at, bytes} sorted by key and is rewritten by flush().
// Objects are published with a no-replace link so the first writer of a key
// wins, within and across processes. Storage failures throw CacheError.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);
  ~ResponseCache();

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<CacheEntry> get(const std::string& key);
  // Returns true if this call stored the value, false if the key existed.
  bool put(const std::string& key, std::string_view value);

  // Returns the cached value, or runs `produce` once per key even under
  // concurrent misses; every concurrent caller observes the stored value.
  CacheEntry get_or_produce(const std::string& key, const std::function<std::string()>& produce,
                            bool* was_hit = nullptr);

  void flush();

  CacheStats stats() const;
  std::size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path object_path(const std::string& key) const;
  void load_index();

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::int64_t> created_;  // key -> created_at
  std::mutex flush_mu_;
  std::mutex inflight_mu_;
  std::map<std::string, std::shared_future<CacheEntry>> inflight_;
  std::atomic<std::uint64_t> hits_{0}, misses_{0}, writes_{0};
  std::atomic<std::uint64_t> tmp_counter_{0};
};

}  // namespace apiward::gateway
