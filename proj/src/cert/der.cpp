#include "quicaudit/cert/der.hpp"

#include "quicaudit/error.hpp"

namespace quicaudit::cert::der {

Tlv read(ByteView data, std::size_t offset) {
  if (offset + 2 > data.size()) throw ParseError("truncated DER header", offset);
  Tlv t;
  t.offset = offset;
  t.tag = data[offset];
  if ((t.tag & 0x1f) == 0x1f) throw ParseError("high tag numbers are not supported", offset);
  const std::uint8_t first = data[offset + 1];
  if (first < 0x80) {
    t.header_len = 2;
    t.length = first;
  } else {
    const std::size_t n = first & 0x7f;
    if (n == 0) throw ParseError("indefinite length in DER", offset + 1);
    if (n > 4) throw ParseError("DER length field too long", offset + 1);
    if (offset + 2 + n > data.size()) throw ParseError("truncated DER length", offset + 1);
    std::size_t len = 0;
    for (std::size_t i = 0; i < n; ++i) len = (len << 8) | data[offset + 2 + i];
    if (data[offset + 2] == 0 || len < 0x80) throw ParseError("non-minimal DER length", offset + 1);
    t.header_len = 2 + n;
    t.length = len;
  }
  if (t.length > data.size() - offset - t.header_len)
    throw ParseError("DER element runs past end of input", offset);
  return t;
}

std::vector<Tlv> children(ByteView data, const Tlv& parent) {
  if (!parent.constructed()) throw ParseError("primitive element has no children", parent.offset);
  std::vector<Tlv> out;
  std::size_t at = parent.content_offset();
  while (at < parent.end()) {
    Tlv child = read(data.subspan(0, parent.end()), at);
    at = child.end();
    out.push_back(child);
  }
  return out;
}

ByteView content(ByteView data, const Tlv& tlv) { return data.subspan(tlv.content_offset(), tlv.length); }

ByteView whole(ByteView data, const Tlv& tlv) { return data.subspan(tlv.offset, tlv.total()); }

std::string oid_to_string(ByteView c) {
  if (c.empty()) return "";
  std::string out;
  std::uint64_t value = 0;
  bool first = true;
  for (std::uint8_t b : c) {
    value = (value << 7) | (b & 0x7f);
    if (b & 0x80) continue;
    if (first) {
      const std::uint64_t arc1 = value < 40 ? 0 : (value < 80 ? 1 : 2);
      out = std::to_string(arc1) + "." + std::to_string(value - 40 * arc1);
      first = false;
    } else {
      out += "." + std::to_string(value);
    }
    value = 0;
  }
  return out;
}

}  // namespace quicaudit::cert::der
