#include "quicaudit/probe/transport.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <queue>

#include "quicaudit/error.hpp"
#include "quicaudit/net.hpp"
#include "quicaudit/probe/session.hpp"

namespace quicaudit::probe {

using handshake::HandshakeTrace;

Bytes probe_cid(std::string_view label, const Target& target, std::uint32_t initial_size,
                std::uint64_t n) {
  std::string seed(label);
  seed += "|" + target.domain + "|" + target.ip + "|" + std::to_string(target.port) + "|" +
          std::to_string(initial_size) + "|" + std::to_string(n);
  const auto digest = sha256(as_bytes(seed));
  return Bytes(digest.begin(), digest.begin() + wire::kCidLen);
}

SimulatedTransport::SimulatedTransport(mock::BehaviorSpec spec, std::int64_t one_way_delay_us)
    : endpoint_(std::move(spec)), delay_us_(one_way_delay_us) {}

HandshakeTrace SimulatedTransport::handshake(const ProbeConfig& cfg) {
  std::lock_guard lock(mu_);
  const std::uint64_t n = probes_++;
  const Bytes scid = probe_cid("scid", cfg.target, cfg.initial_size, n);
  ProbeSession session(cfg, scid, probe_cid("dcid", cfg.target, cfg.initial_size, n));
  const std::string peer = "sim:" + std::to_string(n);

  struct Event {
    std::int64_t at;
    std::uint64_t seq;
    bool to_server;
    Bytes payload;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;
  std::int64_t now = 0;
  auto to_server = [&](Bytes b) { events.push({now + delay_us_, seq++, true, std::move(b)}); };
  auto to_client = [&](std::vector<mock::MockEndpoint::Send> sends) {
    for (auto& s : sends) events.push({now + delay_us_, seq++, false, std::move(s.payload)});
  };

  to_server(session.start(now));
  while (!session.done()) {
    std::optional<std::int64_t> next;
    auto consider = [&](std::optional<std::int64_t> t) {
      if (t && (!next || *t < *next)) next = t;
    };
    if (!events.empty()) consider(events.top().at);
    consider(session.next_timer());
    consider(endpoint_.next_timer());
    if (!next) break;
    now = std::max(now, *next);
    if (!events.empty() && events.top().at <= now) {
      Event e = events.top();
      events.pop();
      if (e.to_server) {
        to_client(endpoint_.on_datagram(peer, e.payload, now));
      } else {
        for (auto& b : session.on_datagram(e.payload, now)) to_server(std::move(b));
      }
      continue;
    }
    for (auto& b : session.on_timer(now)) to_server(std::move(b));
    to_client(endpoint_.on_timer(now));
  }
  const auto* conn = endpoint_.find(peer, scid);
  last_server_bytes_ = conn ? conn->total_bytes_sent() : 0;
  return session.finish();
}

HandshakeTrace UdpTransport::handshake(const ProbeConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const std::uint64_t n = probes_++;
  const auto nonce = static_cast<std::uint64_t>(Clock::now().time_since_epoch().count());
  ProbeSession session(cfg, probe_cid("scid", cfg.target, cfg.initial_size, n ^ nonce),
                       probe_cid("dcid", cfg.target, cfg.initial_size, n ^ nonce));

  net::Endpoint ep{cfg.target.ip, cfg.target.port};
  const sockaddr_in addr = net::to_sockaddr(ep);
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw IoError("socket: " + std::string(std::strerror(errno)));
  struct Closer {
    int fd;
    ~Closer() { ::close(fd); }
  } closer{fd};
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
    throw IoError("connect " + ep.to_string() + ": " + std::strerror(errno));

  const auto epoch = Clock::now();
  auto now_us = [&] {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - epoch).count();
  };
  auto send = [&](const Bytes& b) {
    if (::send(fd, b.data(), b.size(), 0) < 0 && errno == ECONNREFUSED) session.mark_refused();
  };

  send(session.start(now_us()));
  std::vector<std::uint8_t> buf(65536);
  while (!session.done()) {
    int timeout_ms = 50;
    if (auto t = session.next_timer())
      timeout_ms = static_cast<int>(std::clamp<std::int64_t>((*t - now_us() + 999) / 1000, 0, 50));
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, timeout_ms) > 0) {
      const auto got = ::recv(fd, buf.data(), buf.size(), 0);
      if (got > 0) {
        for (auto& b : session.on_datagram(ByteView(buf.data(), static_cast<std::size_t>(got)), now_us()))
          send(b);
      } else if (got < 0 && errno == ECONNREFUSED) {
        session.mark_refused();
      }
      continue;
    }
    for (auto& b : session.on_timer(now_us())) send(b);
  }
  return session.finish();
}

HandshakeTrace probe_once(const ProbeConfig& cfg, QuicTransport& transport) {
  validate(cfg);
  const auto caps = transport.capabilities();
  if (!caps.exact_initial_padding || !caps.datagram_timing || !caps.packet_types ||
      !caps.retry_transparency)
    throw CapabilityMissingError("transport lacks a required capability");
  if (cfg.mode == ProbeMode::kNoAck && !caps.ack_suppression)
    throw CapabilityMissingError("transport cannot suppress ACKs");
  HandshakeTrace trace = transport.handshake(cfg);
  if (!caps.frame_visibility) {
    trace.frames_visible = false;
    for (auto& d : trace.datagrams)
      for (auto& p : d.packets) p.frames.clear();
  }
  handshake::validate(trace);
  if (trace.datagrams.front().udp_payload_len != cfg.initial_size)
    throw TraceError("first client datagram does not match the configured Initial size");
  if (cfg.mode == ProbeMode::kNoAck) {
    const auto client = std::count_if(trace.datagrams.begin(), trace.datagrams.end(),
                                      [](const auto& d) { return d.from_client(); });
    if (client != 1) throw TraceError("NO_ACK probe sent more than one datagram");
  }
  return trace;
}

}  // namespace quicaudit::probe
