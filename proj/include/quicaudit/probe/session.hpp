#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "quicaudit/bytes.hpp"
#include "quicaudit/handshake/trace.hpp"
#include "quicaudit/probe/config.hpp"
#include "quicaudit/wire/packet.hpp"

namespace quicaudit::probe {

// Client half of a probe, independent of any socket. The driver calls
// start() once, then feeds received datagrams and timer expirations until
// done(), sending whatever each call returns.
class ProbeSession {
 public:
  // ACKs go out once the server has been quiet this long.
  static constexpr std::int64_t kAckDelayUs = 10'000;

  ProbeSession(ProbeConfig cfg, Bytes client_cid, Bytes initial_dcid);

  Bytes start(std::int64_t now_us);
  std::vector<Bytes> on_datagram(ByteView datagram, std::int64_t now_us);
  std::vector<Bytes> on_timer(std::int64_t now_us);
  std::optional<std::int64_t> next_timer() const;
  bool done() const { return done_; }

  // The path reported an ICMP port unreachable.
  void mark_refused();
  handshake::HandshakeTrace finish();

 private:
  Bytes build_initial(std::uint32_t pn, ByteView token, std::size_t size) const;
  Bytes build_ack_flight();
  void record(handshake::Direction dir, ByteView datagram, std::int64_t now_us);

  ProbeConfig cfg_;
  Bytes client_cid_;
  Bytes dcid_;
  Bytes token_;
  handshake::HandshakeTrace trace_;
  std::int64_t deadline_us_ = 0;
  std::optional<std::int64_t> ack_at_;
  bool started_ = false;
  bool done_ = false;
  bool refused_ = false;
  bool retried_ = false;
  bool any_server_datagram_ = false;
  bool finished_sent_ = false;
  std::uint32_t initial_pn_ = 0;
  std::uint32_t hs_pn_ = 0;
  std::optional<std::uint32_t> largest_initial_;
  std::optional<std::uint32_t> largest_hs_;
  bool initial_ack_pending_ = false;
  bool hs_ack_pending_ = false;
  wire::tls::StreamAssembler server_hs_;
};

}  // namespace quicaudit::probe
