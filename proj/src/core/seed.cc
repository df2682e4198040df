#include "apiward/core/seed.h"

#include <string>

#include "apiward/core/digest.h"

namespace apiward {

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view prompt_id) {
  std::string msg(8 + prompt_id.size(), '\0');
  for (int i = 0; i < 8; ++i) {
    msg[i] = static_cast<char>((global_seed >> (8 * i)) & 0xff);
  }
  msg.replace(8, prompt_id.size(), prompt_id);
  const Sha256 d = sha256(msg);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
  return v;
}

double unit_interval(std::uint64_t v) {
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

}  // namespace apiward
