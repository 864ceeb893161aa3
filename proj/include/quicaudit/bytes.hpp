#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quicaudit {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Sha256Digest = std::array<std::uint8_t, 32>;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

Sha256Digest sha256(ByteView data);
std::string to_hex(const Sha256Digest& digest);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Bytes read_file(const std::string& path);

// Writes through a temporary sibling and renames into place, so a failed
// write never leaves a truncated file behind.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace quicaudit
