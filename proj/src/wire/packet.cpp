#include "quicaudit/wire/packet.hpp"

#include <algorithm>

#include "quicaudit/error.hpp"

namespace quicaudit::wire {

using handshake::FrameKind;
using handshake::PacketKind;

namespace {

std::size_t varint_len(std::uint64_t v) {
  if (v < (1u << 6)) return 1;
  if (v < (1u << 14)) return 2;
  if (v < (1u << 30)) return 4;
  return 8;
}

void put_varint(Bytes& out, std::uint64_t v) {
  switch (varint_len(v)) {
    case 1:
      out.push_back(static_cast<std::uint8_t>(v));
      break;
    case 2:
      out.push_back(static_cast<std::uint8_t>(0x40 | (v >> 8)));
      out.push_back(static_cast<std::uint8_t>(v));
      break;
    case 4:
      out.push_back(static_cast<std::uint8_t>(0x80 | (v >> 24)));
      for (int shift = 16; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
      break;
    default:
      out.push_back(static_cast<std::uint8_t>(0xc0 | (v >> 56)));
      for (int shift = 48; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
      break;
  }
}

// Non-minimal fixed-width varint forms are legal in QUIC and keep frame
// sizes independent of the values they carry.
void put_varint2(Bytes& out, std::uint64_t v) {
  if (v >= (1u << 14)) throw Error("value too large for 2-byte varint");
  out.push_back(static_cast<std::uint8_t>(0x40 | (v >> 8)));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_varint4(Bytes& out, std::uint64_t v) {
  if (v >= (1u << 30)) throw Error("value too large for 4-byte varint");
  out.push_back(static_cast<std::uint8_t>(0x80 | (v >> 24)));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_cid(Bytes& out, ByteView cid) {
  out.push_back(static_cast<std::uint8_t>(cid.size()));
  out.insert(out.end(), cid.begin(), cid.end());
}

class Reader {
 public:
  Reader(ByteView data, std::size_t base) : data_(data), base_(base) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ >= data_.size(); }
  std::uint8_t peek() const {
    need(1);
    return data_[pos_];
  }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | data_[pos_++];
    return v;
  }
  std::uint64_t varint() {
    need(1);
    const std::size_t len = std::size_t{1} << (data_[pos_] >> 6);
    need(len);
    std::uint64_t v = data_[pos_++] & 0x3f;
    for (std::size_t i = 1; i < len; ++i) v = v << 8 | data_[pos_++];
    return v;
  }
  Bytes take(std::size_t n) {
    need(n);
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw ParseError("truncated packet", base_ + pos_);
  }

  ByteView data_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::vector<Frame> decode_frames(ByteView payload, std::size_t base) {
  std::vector<Frame> frames;
  Reader r(payload, base);
  while (!r.done()) {
    const std::size_t start = r.pos();
    Frame f;
    const std::uint8_t type = r.u8();
    switch (type) {
      case 0x00: {
        while (!r.done() && r.peek() == 0x00) r.u8();
        f.type = FrameType::kPadding;
        break;
      }
      case 0x01:
        f.type = FrameType::kPing;
        break;
      case 0x02:
      case 0x03: {
        f.type = FrameType::kAck;
        f.largest_acked = r.varint();
        r.varint();  // delay
        const auto ranges = r.varint();
        r.varint();  // first range
        for (std::uint64_t i = 0; i < ranges; ++i) {
          r.varint();
          r.varint();
        }
        if (type == 0x03) {
          r.varint();
          r.varint();
          r.varint();
        }
        break;
      }
      case 0x06: {
        f.type = FrameType::kCrypto;
        f.offset = r.varint();
        const auto len = r.varint();
        f.data = r.take(static_cast<std::size_t>(len));
        break;
      }
      case 0x1c:
      case 0x1d: {
        f.type = FrameType::kConnectionClose;
        r.varint();
        if (type == 0x1c) r.varint();
        r.skip(static_cast<std::size_t>(r.varint()));
        break;
      }
      case 0x1e:
        f.type = FrameType::kHandshakeDone;
        break;
      default:
        throw ParseError("unsupported frame type " + std::to_string(type), base + start);
    }
    f.wire_len = r.pos() - start;
    frames.push_back(std::move(f));
  }
  return frames;
}

Bytes encode_long(std::uint8_t type_bits, ByteView dcid, ByteView scid,
                  const ByteView* token, std::uint32_t pn, ByteView payload) {
  Bytes out;
  out.reserve(64 + payload.size());
  out.push_back(static_cast<std::uint8_t>(0xc0 | type_bits << 4 | 0x03));
  put_u32(out, kVersion1);
  put_cid(out, dcid);
  put_cid(out, scid);
  if (token != nullptr) {
    put_varint(out, token->size());
    out.insert(out.end(), token->begin(), token->end());
  }
  put_varint2(out, kPacketNumberLen + payload.size() + kTagLen);
  put_u32(out, pn);
  out.insert(out.end(), payload.begin(), payload.end());
  out.insert(out.end(), kTagLen, 0);
  return out;
}

}  // namespace

std::size_t initial_overhead(std::size_t token_len) {
  return 1 + 4 + 1 + kCidLen + 1 + kCidLen + varint_len(token_len) + token_len + 2 +
         kPacketNumberLen + kTagLen;
}

std::size_t handshake_overhead() {
  return 1 + 4 + 1 + kCidLen + 1 + kCidLen + 2 + kPacketNumberLen + kTagLen;
}

std::size_t short_overhead() { return 1 + kCidLen + kPacketNumberLen + kTagLen; }

std::size_t retry_len(std::size_t token_len) {
  return 1 + 4 + 1 + kCidLen + 1 + kCidLen + token_len + kTagLen;
}

void append_padding(Bytes& out, std::size_t n) { out.insert(out.end(), n, 0x00); }

void append_ping(Bytes& out) { out.push_back(0x01); }

std::size_t ack_frame_len(std::uint64_t largest_acked) { return 4 + varint_len(largest_acked); }

void append_ack(Bytes& out, std::uint64_t largest_acked) {
  out.push_back(0x02);
  put_varint(out, largest_acked);
  out.push_back(0x00);  // delay
  out.push_back(0x00);  // range count
  out.push_back(0x00);  // first range
}

void append_crypto(Bytes& out, std::uint64_t offset, ByteView data) {
  out.push_back(0x06);
  put_varint4(out, offset);
  put_varint2(out, data.size());
  out.insert(out.end(), data.begin(), data.end());
}

void append_handshake_done(Bytes& out) { out.push_back(0x1e); }

Bytes encode_initial(ByteView dcid, ByteView scid, ByteView token, std::uint32_t pn,
                     ByteView payload) {
  return encode_long(0, dcid, scid, &token, pn, payload);
}

Bytes encode_handshake(ByteView dcid, ByteView scid, std::uint32_t pn, ByteView payload) {
  return encode_long(2, dcid, scid, nullptr, pn, payload);
}

Bytes encode_retry(ByteView dcid, ByteView scid, ByteView token) {
  Bytes out;
  out.push_back(0xf0);
  put_u32(out, kVersion1);
  put_cid(out, dcid);
  put_cid(out, scid);
  out.insert(out.end(), token.begin(), token.end());
  out.insert(out.end(), kTagLen, 0);
  return out;
}

Bytes encode_short(ByteView dcid, std::uint32_t pn, ByteView payload) {
  Bytes out;
  out.push_back(0x43);
  out.insert(out.end(), dcid.begin(), dcid.end());
  put_u32(out, pn);
  out.insert(out.end(), payload.begin(), payload.end());
  out.insert(out.end(), kTagLen, 0);
  return out;
}

DecodedDatagram decode_datagram(ByteView datagram) {
  DecodedDatagram out;
  std::size_t pos = 0;
  while (pos < datagram.size()) {
    if (datagram[pos] == 0x00) {
      out.trailing_padding = datagram.size() - pos;
      break;
    }
    Reader r(datagram.subspan(pos), pos);
    Packet p;
    const std::uint8_t first = r.u8();
    if ((first & 0x40) == 0 && (first & 0x80) == 0)
      throw ParseError("fixed bit not set", pos);
    if (first & 0x80) {
      p.version = r.u32();
      p.dcid = r.take(r.u8());
      p.scid = r.take(r.u8());
      if (p.version == 0) {
        p.kind = PacketKind::kVersionNegotiation;
        r.skip(r.remaining());
      } else {
        const int type = (first >> 4) & 0x03;
        if (type == 3) {
          p.kind = PacketKind::kRetry;
          if (r.remaining() < kTagLen) throw ParseError("retry without integrity tag", pos);
          p.token = r.take(r.remaining() - kTagLen);
          r.skip(kTagLen);
        } else if (type == 1) {
          throw ParseError("0-RTT packets are not supported", pos);
        } else {
          p.kind = type == 0 ? PacketKind::kInitial : PacketKind::kHandshake;
          if (type == 0) p.token = r.take(static_cast<std::size_t>(r.varint()));
          const auto length = static_cast<std::size_t>(r.varint());
          if (length < kPacketNumberLen + kTagLen)
            throw ParseError("packet length shorter than number and tag", pos + r.pos());
          p.packet_number = r.u32();
          const std::size_t payload_len = length - kPacketNumberLen - kTagLen;
          const std::size_t payload_at = r.pos();
          r.skip(payload_len);
          r.skip(kTagLen);
          p.frames = decode_frames(datagram.subspan(pos + payload_at, payload_len),
                                   pos + payload_at);
        }
      }
    } else {
      p.kind = PacketKind::kOneRtt;
      p.dcid = r.take(kCidLen);
      p.packet_number = r.u32();
      if (r.remaining() < kTagLen) throw ParseError("short packet without tag", pos + r.pos());
      const std::size_t payload_at = r.pos();
      const std::size_t payload_len = r.remaining() - kTagLen;
      r.skip(r.remaining());
      p.frames = decode_frames(datagram.subspan(pos + payload_at, payload_len), pos + payload_at);
    }
    p.wire_len = r.pos();
    pos += p.wire_len;
    out.packets.push_back(std::move(p));
  }
  return out;
}

handshake::Datagram to_trace_datagram(const DecodedDatagram& decoded,
                                      handshake::Direction direction, std::int64_t time_us,
                                      std::size_t udp_len) {
  handshake::Datagram d;
  d.direction = direction;
  d.time_us = time_us;
  d.udp_payload_len = static_cast<std::uint32_t>(udp_len);
  d.trailing_padding = static_cast<std::uint32_t>(decoded.trailing_padding);
  for (const auto& p : decoded.packets) {
    handshake::PacketRecord rec;
    rec.kind = p.kind;
    rec.wire_len = static_cast<std::uint32_t>(p.wire_len);
    rec.scid = p.scid;
    rec.dcid = p.dcid;
    for (const auto& f : p.frames) {
      handshake::FrameSummary s;
      s.payload_len = static_cast<std::uint32_t>(f.wire_len);
      switch (f.type) {
        case FrameType::kCrypto:
          s.kind = FrameKind::kCrypto;
          s.crypto_tls_len = static_cast<std::uint32_t>(f.data.size());
          break;
        case FrameType::kAck:
          s.kind = FrameKind::kAck;
          break;
        case FrameType::kPadding:
          s.kind = FrameKind::kPadding;
          break;
        default:
          s.kind = FrameKind::kOther;
          break;
      }
      rec.frames.push_back(s);
    }
    d.packets.push_back(std::move(rec));
  }
  return d;
}

namespace tls {

Bytes message(std::uint8_t type, std::size_t body_len, std::uint8_t fill) {
  if (body_len >= (1u << 24)) throw Error("handshake message too large");
  Bytes out;
  out.reserve(kHeaderLen + body_len);
  out.push_back(type);
  out.push_back(static_cast<std::uint8_t>(body_len >> 16));
  out.push_back(static_cast<std::uint8_t>(body_len >> 8));
  out.push_back(static_cast<std::uint8_t>(body_len));
  for (std::size_t i = 0; i < body_len; ++i)
    out.push_back(static_cast<std::uint8_t>(fill + (i % 7)));
  return out;
}

Bytes server_handshake_stream(std::size_t total_len) {
  if (total_len < kMinServerHandshakeStream)
    throw ConfigError("handshake stream of " + std::to_string(total_len) +
                      " bytes is below the minimum " +
                      std::to_string(kMinServerHandshakeStream));
  const std::size_t cert_len =
      total_len - kEncryptedExtensionsLen - kCertificateVerifyLen - kFinishedLen;
  Bytes out = message(kEncryptedExtensions, kEncryptedExtensionsLen - kHeaderLen, 0x10);
  // certificate_request_context length 0, then a 3-byte certificate_list
  // length, then opaque certificate bytes.
  Bytes cert = message(kCertificate, cert_len - kHeaderLen, 0x30);
  const std::size_t list_len = cert_len - kMinCertificateLen;
  cert[4] = 0;
  cert[5] = static_cast<std::uint8_t>(list_len >> 16);
  cert[6] = static_cast<std::uint8_t>(list_len >> 8);
  cert[7] = static_cast<std::uint8_t>(list_len);
  out.insert(out.end(), cert.begin(), cert.end());
  Bytes cv = message(kCertificateVerify, kCertificateVerifyLen - kHeaderLen, 0x50);
  out.insert(out.end(), cv.begin(), cv.end());
  Bytes fin = message(kFinished, kFinishedLen - kHeaderLen, 0x70);
  out.insert(out.end(), fin.begin(), fin.end());
  return out;
}

void StreamAssembler::add(std::uint64_t offset, ByteView data) {
  pending_.emplace_back(offset, Bytes(data.begin(), data.end()));
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      const auto [off, bytes] = *it;
      if (off > contiguous_.size()) continue;
      const std::uint64_t end = off + bytes.size();
      if (end > contiguous_.size()) {
        const auto skip = static_cast<std::ptrdiff_t>(contiguous_.size() - off);
        contiguous_.insert(contiguous_.end(), bytes.begin() + skip, bytes.end());
      }
      pending_.erase(it);
      progressed = true;
      break;
    }
  }
}

std::vector<std::uint8_t> StreamAssembler::complete_messages() const {
  std::vector<std::uint8_t> types;
  std::size_t pos = 0;
  while (pos + kHeaderLen <= contiguous_.size()) {
    const std::size_t len = std::size_t{contiguous_[pos + 1]} << 16 |
                            std::size_t{contiguous_[pos + 2]} << 8 | contiguous_[pos + 3];
    if (pos + kHeaderLen + len > contiguous_.size()) break;
    types.push_back(contiguous_[pos]);
    pos += kHeaderLen + len;
  }
  return types;
}

bool StreamAssembler::has_message(std::uint8_t type) const {
  const auto types = complete_messages();
  return std::find(types.begin(), types.end(), type) != types.end();
}

}  // namespace tls

}  // namespace quicaudit::wire
