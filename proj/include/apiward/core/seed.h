#pragma once

#include <cstdint>
#include <string_view>

namespace apiward {

// Per-prompt seed: first 8 bytes (big-endian) of
// SHA-256(le64(global_seed) || prompt_id). Independent of processing order,
// so serial and parallel runs select the same prompts.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view prompt_id);

// Maps a 64-bit value onto [0, 1) using its top 53 bits.
double unit_interval(std::uint64_t v);

}  // namespace apiward
