#include "apiward/gateway/cache.h"

#include <sys/stat.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apiward/core/digest.h"
#include "apiward/core/errors.h"
#include "apiward/core/manifest.h"

namespace apiward::gateway {

namespace fs = std::filesystem;

namespace {

bool is_key(std::string_view name) {
  if (name.size() != 64) return false;
  for (char c : name) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string cache_key(std::string_view model_id, const GenerationParams& params,
                      std::string_view prompt_text) {
  std::string canon;
  append_field(canon, "model", model_id);
  canon += "temperature=" + canonical_real(params.temperature) + "\n";
  canon += "max_tokens=" + std::to_string(params.max_tokens) + "\n";
  append_field(canon, "prompt", prompt_text);
  return sha256_hex(canon);
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "objects", ec);
  if (ec) throw CacheError("cannot create cache directory " + dir_.string() + ": " + ec.message());
  load_index();
}

ResponseCache::~ResponseCache() {
  try {
    flush();
  } catch (...) {
  }
}

fs::path ResponseCache::object_path(const std::string& key) const {
  return dir_ / "objects" / key;
}

void ResponseCache::load_index() {
  std::map<std::string, std::int64_t> from_index;
  const auto index = dir_ / "index.json";
  if (fs::exists(index)) {
    std::ifstream in(index);
    try {
      const auto j = nlohmann::json::parse(in);
      for (const auto& e : j.at("entries")) {
        from_index[e.at("key").get<std::string>()] = e.at("created_at").get<std::int64_t>();
      }
    } catch (const std::exception& e) {
      throw CacheError("corrupt cache index " + index.string() + ": " + e.what());
    }
  }
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_ / "objects", ec)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || !is_key(name)) continue;
    if (auto it = from_index.find(name); it != from_index.end()) {
      created_[name] = it->second;
    } else {
      // Object written by a process that did not get to flush the index.
      struct stat st {};
      created_[name] = ::stat(entry.path().c_str(), &st) == 0 ? st.st_mtime : 0;
    }
  }
  if (ec) throw CacheError("cannot scan cache " + dir_.string() + ": " + ec.message());
}

std::optional<CacheEntry> ResponseCache::get(const std::string& key) {
  std::int64_t created = 0;
  {
    std::shared_lock lock(mu_);
    auto it = created_.find(key);
    if (it == created_.end()) {
      ++misses_;
      return std::nullopt;
    }
    created = it->second;
  }
  std::ifstream in(object_path(key), std::ios::binary);
  if (!in) throw CacheError("cache object missing for key " + key);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw CacheError("cannot read cache object " + key);
  ++hits_;
  return CacheEntry{key, buf.str(), created};
}

bool ResponseCache::put(const std::string& key, std::string_view value) {
  if (!is_key(key)) throw CacheError("malformed cache key '" + key + "'");
  {
    std::shared_lock lock(mu_);
    if (created_.contains(key)) return false;
  }
  std::unique_lock lock(mu_);
  if (created_.contains(key)) return false;

  const auto target = object_path(key);
  auto tmp = dir_ / "objects" /
             (".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(tmp_counter_++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(value.data(), static_cast<std::streamsize>(value.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw CacheError("cannot write cache object " + tmp.string());
    }
  }
  // link() refuses to replace an existing name, so a concurrent process that
  // already published this key keeps its value.
  const bool stored = ::link(tmp.c_str(), target.c_str()) == 0;
  const int err = errno;
  std::error_code ignored;
  fs::remove(tmp, ignored);
  if (!stored && err != EEXIST) {
    throw CacheError("cannot publish cache object " + target.string() + ": " +
                     std::strerror(err));
  }
  created_[key] = now_seconds();
  if (stored) ++writes_;
  return stored;
}

CacheEntry ResponseCache::get_or_produce(const std::string& key,
                                         const std::function<std::string()>& produce,
                                         bool* was_hit) {
  if (auto hit = get(key)) {
    if (was_hit) *was_hit = true;
    return std::move(*hit);
  }
  std::promise<CacheEntry> promise;
  std::shared_future<CacheEntry> future;
  bool leader = false;
  {
    std::lock_guard lock(inflight_mu_);
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      inflight_.emplace(key, future);
      leader = true;
    }
  }
  if (was_hit) *was_hit = !leader;
  if (!leader) return future.get();

  try {
    // Another leader may have finished between the first lookup and here.
    auto entry = get(key);
    if (!entry) {
      put(key, produce());
      entry = get(key);  // first write wins
    }
    promise.set_value(entry.value());
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key);
  }
  return future.get();
}

void ResponseCache::flush() {
  std::lock_guard flush_lock(flush_mu_);
  nlohmann::ordered_json j;
  j["entries"] = nlohmann::ordered_json::array();
  {
    std::shared_lock lock(mu_);
    for (const auto& [key, created] : created_) {
      std::error_code ec;
      const auto bytes = fs::file_size(object_path(key), ec);
      nlohmann::ordered_json e;
      e["key"] = key;
      e["created_at"] = created;
      e["bytes"] = ec ? 0 : bytes;
      j["entries"].push_back(std::move(e));
    }
  }
  try {
    write_text(dir_ / "index.json", j.dump(1) + "\n");
  } catch (const std::exception& e) {
    throw CacheError(std::string("cannot write cache index: ") + e.what());
  }
}

CacheStats ResponseCache::stats() const { return {hits_.load(), misses_.load(), writes_.load()}; }

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return created_.size();
}

}  // namespace apiward::gateway
