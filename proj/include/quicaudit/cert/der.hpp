#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quicaudit/bytes.hpp"

namespace quicaudit::cert::der {

// One DER element. `offset` is relative to the buffer passed to read().
struct Tlv {
  std::uint8_t tag = 0;
  std::size_t offset = 0;
  std::size_t header_len = 0;
  std::size_t length = 0;

  std::size_t total() const { return header_len + length; }
  std::size_t content_offset() const { return offset + header_len; }
  std::size_t end() const { return offset + total(); }
  bool constructed() const { return tag & 0x20; }
};

inline constexpr std::uint8_t kInteger = 0x02;
inline constexpr std::uint8_t kBitString = 0x03;
inline constexpr std::uint8_t kOctetString = 0x04;
inline constexpr std::uint8_t kOid = 0x06;
inline constexpr std::uint8_t kSequence = 0x30;
inline constexpr std::uint8_t kContext0 = 0xa0;
inline constexpr std::uint8_t kContext3 = 0xa3;

// Reads the element at `offset`. Only definite lengths and low tag numbers
// are accepted. Throws ParseError carrying the offending offset.
Tlv read(ByteView data, std::size_t offset);

// Direct children of a constructed element; they must tile its content.
std::vector<Tlv> children(ByteView data, const Tlv& parent);

ByteView content(ByteView data, const Tlv& tlv);
ByteView whole(ByteView data, const Tlv& tlv);

// Dotted-decimal form of OID content bytes.
std::string oid_to_string(ByteView content);

}  // namespace quicaudit::cert::der
