#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quicaudit/bytes.hpp"

namespace quicaudit::handshake {

enum class Direction : std::uint8_t { kClientToServer, kServerToClient };

enum class PacketKind : std::uint8_t {
  kInitial,
  kHandshake,
  kRetry,
  kOneRtt,
  kVersionNegotiation,
};

enum class FrameKind : std::uint8_t { kCrypto, kAck, kPadding, kOther };

enum class Outcome : std::uint8_t { kCompleted, kTimedOut, kRefused, kUnreachable };

// One frame as seen on the wire. payload_len is the number of bytes the
// frame occupies inside the packet payload, including the frame type and
// any length/offset fields; crypto_tls_len is the TLS data it carries.
struct FrameSummary {
  FrameKind kind = FrameKind::kOther;
  std::uint32_t payload_len = 0;
  std::uint32_t crypto_tls_len = 0;

  bool operator==(const FrameSummary&) const = default;
};

struct PacketRecord {
  PacketKind kind = PacketKind::kInitial;
  std::uint32_t wire_len = 0;
  std::vector<FrameSummary> frames;
  Bytes scid;
  Bytes dcid;

  bool operator==(const PacketRecord&) const = default;
};

// A UDP datagram as observed by the client. udp_payload_len always equals
// the packets' wire lengths plus trailing_padding, i.e. bytes after the
// last QUIC packet that belong to no packet (UDP-layer padding).
struct Datagram {
  Direction direction = Direction::kClientToServer;
  std::uint32_t udp_payload_len = 0;
  std::int64_t time_us = 0;
  std::vector<PacketRecord> packets;
  std::uint32_t trailing_padding = 0;

  bool from_client() const { return direction == Direction::kClientToServer; }
  bool from_server() const { return direction == Direction::kServerToClient; }
  bool has_packet(PacketKind kind) const;

  bool operator==(const Datagram&) const = default;
};

struct HandshakeTrace {
  std::vector<Datagram> datagrams;
  std::uint32_t client_initial_size = 0;
  Outcome outcome = Outcome::kTimedOut;
  std::optional<std::int64_t> handshake_confirmed_time_us;
  // False when the capturing transport could not expose frames; packet
  // kinds and datagram sizes are still trustworthy.
  bool frames_visible = true;
  bool stateless_reset = false;
  std::string target;

  bool operator==(const HandshakeTrace&) const = default;
};

// Throws TraceError on any structural violation.
void validate(const Datagram& datagram);
void validate(const HandshakeTrace& trace);

std::string_view to_string(Direction d);
std::string_view to_string(PacketKind k);
std::string_view to_string(FrameKind k);
std::string_view to_string(Outcome o);

Direction parse_direction(std::string_view s);
PacketKind parse_packet_kind(std::string_view s);
FrameKind parse_frame_kind(std::string_view s);
Outcome parse_outcome(std::string_view s);

// Convenience constructors, mostly for synthetic traces.
FrameSummary crypto_frame(std::uint32_t tls_len, std::uint32_t frame_overhead = 0);
FrameSummary padding_frame(std::uint32_t len);
FrameSummary ack_frame(std::uint32_t len);

// Builds a packet whose wire length is header_len plus the frames.
PacketRecord make_packet(PacketKind kind, std::uint32_t header_len,
                         std::vector<FrameSummary> frames);

// Builds a datagram whose udp_payload_len is derived from its packets.
Datagram make_datagram(Direction direction, std::int64_t time_us,
                       std::vector<PacketRecord> packets,
                       std::uint32_t trailing_padding = 0);

// A datagram of `len` bytes holding one opaque packet; handy when only byte
// counts matter.
Datagram opaque_datagram(Direction direction, std::int64_t time_us, std::uint32_t len,
                         PacketKind kind = PacketKind::kInitial);

}  // namespace quicaudit::handshake
