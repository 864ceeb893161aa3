#include "quicaudit/handshake/trace.hpp"

#include <algorithm>
#include <numeric>

#include "quicaudit/error.hpp"

namespace quicaudit::handshake {

namespace {

constexpr std::uint32_t kMaxUdpPayload = 65527;

std::string where(std::size_t index) { return "datagram " + std::to_string(index) + ": "; }

}  // namespace

bool Datagram::has_packet(PacketKind kind) const {
  return std::any_of(packets.begin(), packets.end(),
                     [kind](const PacketRecord& p) { return p.kind == kind; });
}

void validate(const Datagram& datagram) {
  if (datagram.udp_payload_len < 1 || datagram.udp_payload_len > kMaxUdpPayload)
    throw TraceError("udp payload length " + std::to_string(datagram.udp_payload_len) +
                     " outside [1, 65527]");
  std::uint64_t sum = datagram.trailing_padding;
  for (const auto& packet : datagram.packets) {
    if (packet.wire_len == 0) throw TraceError("packet with zero wire length");
    if (packet.kind == PacketKind::kRetry && !packet.frames.empty())
      throw TraceError("retry packet carries frames");
    std::uint64_t frame_bytes = 0;
    for (const auto& frame : packet.frames) {
      if (frame.crypto_tls_len > frame.payload_len)
        throw TraceError("frame crypto length exceeds frame length");
      if (frame.kind != FrameKind::kCrypto && frame.crypto_tls_len != 0)
        throw TraceError("non-CRYPTO frame with TLS bytes");
      frame_bytes += frame.payload_len;
    }
    if (frame_bytes > packet.wire_len) throw TraceError("frames exceed packet wire length");
    sum += packet.wire_len;
  }
  if (sum != datagram.udp_payload_len)
    throw TraceError("udp payload length " + std::to_string(datagram.udp_payload_len) +
                     " != packets + trailing padding " + std::to_string(sum));
}

void validate(const HandshakeTrace& trace) {
  if (trace.datagrams.empty()) throw TraceError("empty trace");
  const auto& first = trace.datagrams.front();
  if (!first.from_client() || !first.has_packet(PacketKind::kInitial))
    throw TraceError("first datagram is not a client Initial");
  if (first.udp_payload_len != trace.client_initial_size)
    throw TraceError("client_initial_size " + std::to_string(trace.client_initial_size) +
                     " != first datagram length " + std::to_string(first.udp_payload_len));
  for (std::size_t i = 0; i < trace.datagrams.size(); ++i) {
    try {
      validate(trace.datagrams[i]);
    } catch (const TraceError& e) {
      throw TraceError(where(i) + e.what());
    }
  }
}

std::string_view to_string(Direction d) {
  return d == Direction::kClientToServer ? "c2s" : "s2c";
}

std::string_view to_string(PacketKind k) {
  switch (k) {
    case PacketKind::kInitial: return "INITIAL";
    case PacketKind::kHandshake: return "HANDSHAKE";
    case PacketKind::kRetry: return "RETRY";
    case PacketKind::kOneRtt: return "ONE_RTT";
    case PacketKind::kVersionNegotiation: return "VERSION_NEGOTIATION";
  }
  return "?";
}

std::string_view to_string(FrameKind k) {
  switch (k) {
    case FrameKind::kCrypto: return "CRYPTO";
    case FrameKind::kAck: return "ACK";
    case FrameKind::kPadding: return "PADDING";
    case FrameKind::kOther: return "OTHER";
  }
  return "?";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kCompleted: return "COMPLETED";
    case Outcome::kTimedOut: return "TIMED_OUT";
    case Outcome::kRefused: return "REFUSED";
    case Outcome::kUnreachable: return "UNREACHABLE";
  }
  return "?";
}

Direction parse_direction(std::string_view s) {
  if (s == "c2s") return Direction::kClientToServer;
  if (s == "s2c") return Direction::kServerToClient;
  throw ParseError("unknown direction '" + std::string(s) + "'", 0);
}

PacketKind parse_packet_kind(std::string_view s) {
  for (auto k : {PacketKind::kInitial, PacketKind::kHandshake, PacketKind::kRetry,
                 PacketKind::kOneRtt, PacketKind::kVersionNegotiation})
    if (to_string(k) == s) return k;
  throw ParseError("unknown packet kind '" + std::string(s) + "'", 0);
}

FrameKind parse_frame_kind(std::string_view s) {
  for (auto k : {FrameKind::kCrypto, FrameKind::kAck, FrameKind::kPadding, FrameKind::kOther})
    if (to_string(k) == s) return k;
  throw ParseError("unknown frame kind '" + std::string(s) + "'", 0);
}

Outcome parse_outcome(std::string_view s) {
  for (auto o : {Outcome::kCompleted, Outcome::kTimedOut, Outcome::kRefused,
                 Outcome::kUnreachable})
    if (to_string(o) == s) return o;
  throw ParseError("unknown outcome '" + std::string(s) + "'", 0);
}

FrameSummary crypto_frame(std::uint32_t tls_len, std::uint32_t frame_overhead) {
  return {FrameKind::kCrypto, tls_len + frame_overhead, tls_len};
}

FrameSummary padding_frame(std::uint32_t len) { return {FrameKind::kPadding, len, 0}; }

FrameSummary ack_frame(std::uint32_t len) { return {FrameKind::kAck, len, 0}; }

PacketRecord make_packet(PacketKind kind, std::uint32_t header_len,
                         std::vector<FrameSummary> frames) {
  std::uint32_t len = header_len;
  for (const auto& f : frames) len += f.payload_len;
  PacketRecord p;
  p.kind = kind;
  p.wire_len = len;
  p.frames = std::move(frames);
  return p;
}

Datagram make_datagram(Direction direction, std::int64_t time_us,
                       std::vector<PacketRecord> packets, std::uint32_t trailing_padding) {
  Datagram d;
  d.direction = direction;
  d.time_us = time_us;
  d.trailing_padding = trailing_padding;
  d.udp_payload_len = trailing_padding;
  for (const auto& p : packets) d.udp_payload_len += p.wire_len;
  d.packets = std::move(packets);
  return d;
}

Datagram opaque_datagram(Direction direction, std::int64_t time_us, std::uint32_t len,
                         PacketKind kind) {
  return make_datagram(direction, time_us, {make_packet(kind, len, {})});
}

}  // namespace quicaudit::handshake
