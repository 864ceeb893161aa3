#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "quicaudit/handshake/trace.hpp"

namespace quicaudit::handshake {

// Historical anti-amplification rules, oldest first.
enum class LimitVariant : std::uint8_t {
  kHandshakePackets3,  // at most three Handshake packets
  kDatagrams3,         // at most three datagrams
  kBytes3x,            // at most three times as many bytes
  kData3xRfc9000,      // at most three times the data (current rule)
};

struct LimitPolicy {
  LimitVariant variant = LimitVariant::kData3xRfc9000;
  std::string source_label;

  static LimitPolicy of(LimitVariant variant);
  static LimitPolicy rfc9000() { return of(LimitVariant::kData3xRfc9000); }
};

// All four policies in chronological order.
std::vector<LimitPolicy> all_limit_policies();

std::string_view to_string(LimitVariant v);
LimitVariant parse_limit_variant(std::string_view s);

enum class HandshakeClass : std::uint8_t { kOneRtt, kRetry, kMultiRtt, kAmplification };

std::string_view to_string(HandshakeClass c);
HandshakeClass parse_handshake_class(std::string_view s);

struct ClassificationResult {
  HandshakeClass klass = HandshakeClass::kOneRtt;
  double amplification_factor = 0.0;
  std::uint64_t pre_validation_server_bytes = 0;
  std::uint64_t pre_validation_client_bytes = 0;
  std::uint32_t client_flights = 0;
  bool limit_exceeded = false;
  bool multi_rtt_flag = false;

  bool operator==(const ClassificationResult&) const = default;
};

// Index of the first client datagram that follows the first server
// datagram, i.e. the client's second flight. Server datagrams before it were
// received while the client address was unvalidated. Returns
// trace.datagrams.size() when there is no second client flight.
std::size_t validation_point(const HandshakeTrace& trace);

struct ByteTotals {
  std::uint64_t server = 0;
  std::uint64_t client = 0;
};

ByteTotals pre_validation_bytes(const HandshakeTrace& trace);

// Server UDP payload bytes over client UDP payload bytes before the
// validation point. Padding and retransmissions are included.
double amplification_factor(const HandshakeTrace& trace);

// Precedence: Retry, then limit violation, then multi-RTT, then 1-RTT.
ClassificationResult classify_handshake(const HandshakeTrace& trace,
                                        const LimitPolicy& policy = LimitPolicy::rfc9000());

struct PayloadDecomposition {
  std::uint64_t tls_bytes = 0;
  std::uint64_t quic_header_bytes = 0;
  std::uint64_t padding_bytes = 0;
  std::uint64_t ack_overhead_bytes = 0;

  std::uint64_t total() const {
    return tls_bytes + quic_header_bytes + padding_bytes + ack_overhead_bytes;
  }
  bool operator==(const PayloadDecomposition&) const = default;
};

// Splits the pre-validation server bytes into TLS data, QUIC overhead
// (packet headers, AEAD expansion, frame headers, other frames), padding
// (PADDING frames and UDP-layer trailing padding) and ACK frames.
PayloadDecomposition payload_decomposition(const HandshakeTrace& trace);

struct CoalescenceReport {
  // packets per server datagram -> number of datagrams
  std::map<std::uint32_t, std::uint32_t> packets_per_datagram;
  std::uint32_t max_packets_per_datagram = 0;
  bool ack_only_initial_datagram = false;
  bool coalesces_initial_and_handshake = false;
  // Server acknowledges the client Initial in a datagram of its own and
  // never coalesces Initial and Handshake packets.
  bool separate_ack_flight = false;
};

CoalescenceReport coalescence_report(const HandshakeTrace& trace);

struct LimitCheck {
  bool compliant = true;
  std::uint64_t observed = 0;  // packets, datagrams or bytes, per variant
  std::uint64_t allowed = 0;
  std::string detail;
};

LimitCheck limit_check(const HandshakeTrace& trace, const LimitPolicy& policy);

// Browser Initial sizes measured in the wild.
struct BrowserProfile {
  std::string name;
  std::uint32_t initial_size = 0;
  std::vector<std::string> compression_algorithms;
};

std::vector<BrowserProfile> known_browser_profiles();

}  // namespace quicaudit::handshake
