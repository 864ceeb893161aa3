#pragma once

// Plaintext QUIC-shaped framing used between the prober and the mock server.
//
// Packets follow the RFC 9000 long/short header layout (version, connection
// IDs, token, Length field, 4-byte packet numbers) and carry real frame
// encodings, but payloads are not protected. A 16-byte all-zero trailer
// stands in for the AEAD tag so that byte counts match protected packets.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "quicaudit/bytes.hpp"
#include "quicaudit/handshake/trace.hpp"

namespace quicaudit::wire {

inline constexpr std::uint32_t kVersion1 = 0x00000001;
inline constexpr std::size_t kCidLen = 8;
inline constexpr std::size_t kTagLen = 16;
inline constexpr std::size_t kPacketNumberLen = 4;

// On-wire sizes of fixed elements, for exact flight planning.
inline constexpr std::size_t kCryptoFrameOverhead = 7;  // type, 4-byte offset, 2-byte length
inline constexpr std::size_t kAckFrameLen = 5;          // largest acked below 64

// Long header bytes (without payload) for our fixed CID lengths.
std::size_t initial_overhead(std::size_t token_len);
std::size_t handshake_overhead();
std::size_t short_overhead();
std::size_t retry_len(std::size_t token_len);

enum class FrameType : std::uint8_t {
  kPadding = 0x00,
  kPing = 0x01,
  kAck = 0x02,
  kCrypto = 0x06,
  kConnectionClose = 0x1c,
  kHandshakeDone = 0x1e,
};

struct Frame {
  FrameType type = FrameType::kPadding;
  std::size_t wire_len = 0;
  // CRYPTO
  std::uint64_t offset = 0;
  Bytes data;
  // ACK
  std::uint64_t largest_acked = 0;
};

struct Packet {
  handshake::PacketKind kind = handshake::PacketKind::kInitial;
  std::uint32_t version = kVersion1;
  Bytes dcid;
  Bytes scid;
  Bytes token;
  std::uint32_t packet_number = 0;
  std::vector<Frame> frames;
  std::size_t wire_len = 0;
};

struct DecodedDatagram {
  std::vector<Packet> packets;
  std::size_t trailing_padding = 0;
};

// Frame payload builders. Each appends to `out`.
void append_padding(Bytes& out, std::size_t n);
void append_ping(Bytes& out);
void append_ack(Bytes& out, std::uint64_t largest_acked);
std::size_t ack_frame_len(std::uint64_t largest_acked);
void append_crypto(Bytes& out, std::uint64_t offset, ByteView data);
void append_handshake_done(Bytes& out);

// Packet builders. `payload` is the encoded frame sequence.
Bytes encode_initial(ByteView dcid, ByteView scid, ByteView token, std::uint32_t pn,
                     ByteView payload);
Bytes encode_handshake(ByteView dcid, ByteView scid, std::uint32_t pn, ByteView payload);
Bytes encode_retry(ByteView dcid, ByteView scid, ByteView token);
Bytes encode_short(ByteView dcid, std::uint32_t pn, ByteView payload);

// Decodes every packet of a datagram. Bytes following the last packet that
// start with 0x00 are reported as trailing (UDP-layer) padding.
DecodedDatagram decode_datagram(ByteView datagram);

// Converts a decoded datagram into the trace model.
handshake::Datagram to_trace_datagram(const DecodedDatagram& decoded,
                                      handshake::Direction direction,
                                      std::int64_t time_us, std::size_t udp_len);

// Synthetic TLS 1.3 handshake messages: 1-byte type, 3-byte length, body.
namespace tls {

inline constexpr std::uint8_t kClientHello = 1;
inline constexpr std::uint8_t kServerHello = 2;
inline constexpr std::uint8_t kEncryptedExtensions = 8;
inline constexpr std::uint8_t kCertificate = 11;
inline constexpr std::uint8_t kCertificateVerify = 15;
inline constexpr std::uint8_t kFinished = 20;

inline constexpr std::size_t kHeaderLen = 4;
inline constexpr std::size_t kClientHelloLen = kHeaderLen + 280;
inline constexpr std::size_t kServerHelloLen = kHeaderLen + 86;
inline constexpr std::size_t kEncryptedExtensionsLen = kHeaderLen + 6;
inline constexpr std::size_t kCertificateVerifyLen = kHeaderLen + 72;
inline constexpr std::size_t kFinishedLen = kHeaderLen + 32;
// Certificate message with an empty certificate_list.
inline constexpr std::size_t kMinCertificateLen = kHeaderLen + 4;
// Smallest server Handshake-epoch stream (EE, Certificate, CV, Finished).
inline constexpr std::size_t kMinServerHandshakeStream =
    kEncryptedExtensionsLen + kMinCertificateLen + kCertificateVerifyLen + kFinishedLen;

Bytes message(std::uint8_t type, std::size_t body_len, std::uint8_t fill);

// Server Handshake-epoch stream totalling exactly `total_len` bytes; the
// Certificate message absorbs whatever the fixed messages leave over.
Bytes server_handshake_stream(std::size_t total_len);

// Reassembles a CRYPTO stream and reports complete messages.
class StreamAssembler {
 public:
  void add(std::uint64_t offset, ByteView data);
  // Types of the complete messages at the start of the contiguous prefix.
  std::vector<std::uint8_t> complete_messages() const;
  bool has_message(std::uint8_t type) const;
  std::uint64_t contiguous_len() const { return contiguous_.size(); }

 private:
  Bytes contiguous_;
  std::vector<std::pair<std::uint64_t, Bytes>> pending_;
};

}  // namespace tls

}  // namespace quicaudit::wire
