#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "quicaudit/handshake/trace.hpp"
#include "quicaudit/mock/server.hpp"
#include "quicaudit/probe/config.hpp"

namespace quicaudit::probe {

// What a QUIC stack must expose for the prober to work. Missing frame
// visibility only disables payload decomposition; the rest are required.
struct TransportCapabilities {
  bool exact_initial_padding = false;
  bool datagram_timing = false;
  bool packet_types = false;
  bool frame_visibility = false;
  bool ack_suppression = false;
  bool retry_transparency = false;

  static TransportCapabilities all() { return {true, true, true, true, true, true}; }
};

class QuicTransport {
 public:
  virtual ~QuicTransport() = default;
  virtual TransportCapabilities capabilities() const = 0;
  // Runs one probe and returns the raw trace. cfg has been validated.
  virtual handshake::HandshakeTrace handshake(const ProbeConfig& cfg) = 0;
};

// Runs the prober against an in-process mock endpoint on a virtual clock.
// Probes complete instantly regardless of timeouts and resend schedules.
class SimulatedTransport : public QuicTransport {
 public:
  explicit SimulatedTransport(mock::BehaviorSpec spec, std::int64_t one_way_delay_us = 5'000);

  TransportCapabilities capabilities() const override { return TransportCapabilities::all(); }
  handshake::HandshakeTrace handshake(const ProbeConfig& cfg) override;

  // Server-side view of the most recent probe.
  std::uint64_t last_server_bytes_sent() const { return last_server_bytes_; }
  const mock::MockEndpoint& endpoint() const { return endpoint_; }

 private:
  mock::MockEndpoint endpoint_;
  std::int64_t delay_us_;
  std::uint64_t probes_ = 0;
  std::uint64_t last_server_bytes_ = 0;
  std::mutex mu_;
};

// Plaintext framing over real UDP sockets (pairs with UdpMockServer).
class UdpTransport : public QuicTransport {
 public:
  TransportCapabilities capabilities() const override { return TransportCapabilities::all(); }
  handshake::HandshakeTrace handshake(const ProbeConfig& cfg) override;

 private:
  std::atomic<std::uint64_t> probes_{0};
};

// Connection IDs for probe number `n` towards `target`.
Bytes probe_cid(std::string_view label, const Target& target, std::uint32_t initial_size,
                std::uint64_t n);

// Validates cfg, runs the probe and checks the trace invariants (exact
// Initial size; a single client datagram in NO_ACK mode). Throws
// ConfigError on bad config and CapabilityMissingError when the transport
// cannot honour the mode.
handshake::HandshakeTrace probe_once(const ProbeConfig& cfg, QuicTransport& transport);

}  // namespace quicaudit::probe
