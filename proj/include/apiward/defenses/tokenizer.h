#pragma once

#include <cstdint>
#include <deque>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apiward::defenses {

using TokenId = std::uint32_t;

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  virtual std::size_t count(std::string_view text) const { return encode(text).size(); }
};

// Lossless whitespace-and-punctuation splitter.
//
// A token is an optional run of leading whitespace followed by either a
// maximal run of word bytes (ASCII alphanumerics, '_', and every byte >= 0x80
// so UTF-8 sequences are never split) or a single other byte. Whitespace at
// the very end of the text forms its own token. Decoding concatenates pieces,
// so decode(encode(t)) == t, and any decoded prefix re-encodes to the same
// prefix of ids.
//
// Ids come from a vocabulary interned on first sight; it is shared across
// threads behind a reader/writer lock.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::size_t count(std::string_view text) const override;

  static std::vector<std::string_view> split(std::string_view text);

 private:
  TokenId intern(std::string_view piece) const;

  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::string, TokenId> ids_;
  mutable std::deque<std::string> pieces_;
};

// Process-wide default instance.
const Tokenizer& default_tokenizer();

}  // namespace apiward::defenses
