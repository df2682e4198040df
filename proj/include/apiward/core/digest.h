#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace apiward {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::string_view bytes);
std::string to_hex(const Sha256& digest);
inline std::string sha256_hex(std::string_view bytes) { return to_hex(sha256(bytes)); }

// Appends "name=<byte length>:<value>\n". Length prefixing keeps canonical
// serializations unambiguous for arbitrary text.
void append_field(std::string& out, std::string_view name, std::string_view value);

// Shortest round-trip decimal form of a double, with -0 folded into 0.
std::string canonical_real(double v);

}  // namespace apiward
