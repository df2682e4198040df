#include "apiward/defenses/tokenizer.h"

#include <mutex>

#include "apiward/core/errors.h"

namespace apiward::defenses {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word(unsigned char c) {
  return c >= 0x80 || c == '_' || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

// Calls fn(begin, end) for each token of `text`.
template <typename Fn>
void scan(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const std::size_t start = i;
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == n) {
      fn(start, i);
      break;
    }
    if (is_word(static_cast<unsigned char>(text[i]))) {
      while (i < n && is_word(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      ++i;
    }
    fn(start, i);
  }
}

}  // namespace

std::vector<std::string_view> WhitespaceTokenizer::split(std::string_view text) {
  std::vector<std::string_view> out;
  scan(text, [&](std::size_t b, std::size_t e) { out.push_back(text.substr(b, e - b)); });
  return out;
}

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  scan(text, [&](std::size_t, std::size_t) { ++n; });
  return n;
}

TokenId WhitespaceTokenizer::intern(std::string_view piece) const {
  const std::string key(piece);
  {
    std::shared_lock lock(mu_);
    if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  }
  std::unique_lock lock(mu_);
  auto [it, inserted] = ids_.try_emplace(key, static_cast<TokenId>(pieces_.size()));
  if (inserted) pieces_.push_back(key);
  return it->second;
}

std::vector<TokenId> WhitespaceTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> out;
  scan(text, [&](std::size_t b, std::size_t e) { out.push_back(intern(text.substr(b, e - b))); });
  return out;
}

std::string WhitespaceTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  std::shared_lock lock(mu_);
  for (TokenId id : ids) {
    if (id >= pieces_.size()) throw Error("unknown token id " + std::to_string(id));
    out += pieces_[id];
  }
  return out;
}

const Tokenizer& default_tokenizer() {
  static const WhitespaceTokenizer kTokenizer;
  return kTokenizer;
}

}  // namespace apiward::defenses
