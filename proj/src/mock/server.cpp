#include "quicaudit/mock/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "quicaudit/error.hpp"
#include "quicaudit/net.hpp"
#include "quicaudit/wire/packet.hpp"

namespace quicaudit::mock {

using handshake::PacketKind;
using wire::FrameType;

namespace {

constexpr std::size_t kClientMinInitial = 1200;
constexpr std::size_t kTokenLen = 16;

std::size_t hs_packet_overhead() { return wire::handshake_overhead() + wire::kCryptoFrameOverhead; }
std::size_t hs_packet_min() { return hs_packet_overhead() + 1; }
std::size_t resend_packet_min() { return wire::handshake_overhead() + 1; }

Bytes derive_cid(std::string_view label, ByteView seed) {
  Bytes input(label.begin(), label.end());
  input.insert(input.end(), seed.begin(), seed.end());
  const auto digest = sha256(input);
  return Bytes(digest.begin(), digest.begin() + wire::kCidLen);
}

std::size_t total_size(const std::vector<Bytes>& ds) {
  std::size_t n = 0;
  for (const auto& d : ds) n += d.size();
  return n;
}

}  // namespace

std::vector<std::size_t> split_exact(std::size_t total, std::size_t max_part, std::size_t min_part) {
  if (total < min_part) throw Error("cannot split " + std::to_string(total) + " bytes into parts of at least " + std::to_string(min_part));
  if (max_part < 2 * min_part) throw Error("max part must be at least twice the min part");
  const std::size_t n = (total + max_part - 1) / max_part;
  std::vector<std::size_t> parts(n, max_part);
  std::size_t last = total - (n - 1) * max_part;
  if (last < min_part) {
    parts[n - 2] -= min_part - last;
    last = min_part;
  }
  parts[n - 1] = last;
  return parts;
}

MockConnection::MockConnection(BehaviorSpec spec, Bytes server_cid)
    : spec_(std::move(spec)), server_cid_(std::move(server_cid)) {
  retry_cid_ = derive_cid("retry", server_cid_);
}

Bytes MockConnection::make_token() const {
  const auto digest = sha256(derive_cid("token", client_scid_));
  return Bytes(digest.begin(), digest.begin() + kTokenLen);
}

std::vector<Bytes> MockConnection::emit(std::vector<Bytes> datagrams) {
  for (const auto& d : datagrams) {
    if (!validated_) {
      if (spec_.resend.kind == ResendKind::kCapped3x &&
          sent_unvalidated_ + d.size() > 3 * received_unvalidated_)
        throw std::logic_error("capped server about to exceed 3x of unvalidated client bytes");
      sent_unvalidated_ += d.size();
    }
    sent_total_ += d.size();
  }
  return datagrams;
}

// Lays out the handshake flight. When `cut` is below the flight size, the
// datagrams are planned so that a prefix totals exactly `cut` bytes where
// the packet size floor allows it.
std::vector<Bytes> MockConnection::build_flight(std::size_t cut) {
  using wire::tls::kServerHelloLen;
  const std::size_t m = spec_.max_datagram;
  const std::size_t sp = spec_.superfluous_padding;
  const std::size_t total = spec_.flight_bytes();
  const std::size_t sh_crypto = wire::kCryptoFrameOverhead + kServerHelloLen;

  std::vector<std::size_t> head;
  std::size_t pad_ack = 0;
  std::size_t pad_sh = 0;
  if (spec_.coalesce) {
    head.push_back(wire::initial_overhead(0) + wire::kAckFrameLen + sh_crypto + sp);
  } else {
    pad_ack = (sp + 1) / 2;
    pad_sh = sp - pad_ack;
    head.push_back(wire::initial_overhead(0) + wire::kAckFrameLen + pad_ack);
    head.push_back(wire::initial_overhead(0) + sh_crypto + pad_sh);
  }
  const std::size_t head_sum = std::accumulate(head.begin(), head.end(), std::size_t{0});
  if (total < head_sum + hs_packet_min()) throw ConfigError("flight too small for layout");
  const std::size_t hs_total = total - head_sum;

  std::size_t a = hs_total;
  std::size_t b = 0;
  if (cut < total) {
    a = cut > head_sum ? cut - head_sum : 0;
    b = hs_total - a;
  }
  const std::size_t floor = hs_packet_min();
  if (b > 0 && b < floor) {
    const std::size_t shift = std::min(a, floor - b);
    a -= shift;
    b += shift;
  }
  if (a > 0 && a < floor) {
    b += a;
    a = 0;
  }

  std::size_t d1_hs = 0;
  std::vector<std::size_t> seg_a;
  if (spec_.coalesce && a > 0) {
    const std::size_t room = m > head[0] ? m - head[0] : 0;
    d1_hs = std::min(a, room);
    if (d1_hs < floor) d1_hs = 0;
    std::size_t rest = a - d1_hs;
    if (rest > 0 && rest < floor) {
      if (d1_hs >= floor + (floor - rest)) {
        d1_hs -= floor - rest;
        rest = floor;
      } else {
        d1_hs = 0;
        rest = a;
      }
    }
    if (rest > 0) seg_a = split_exact(rest, m, floor);
  } else if (a > 0) {
    seg_a = split_exact(a, m, floor);
  }
  std::vector<std::size_t> seg_b;
  if (b > 0) seg_b = split_exact(b, m, floor);

  std::vector<std::size_t> hs_sizes;
  if (d1_hs > 0) hs_sizes.push_back(d1_hs);
  hs_sizes.insert(hs_sizes.end(), seg_a.begin(), seg_a.end());
  hs_sizes.insert(hs_sizes.end(), seg_b.begin(), seg_b.end());
  std::size_t stream_len = 0;
  for (auto s : hs_sizes) stream_len += s - hs_packet_overhead();
  hs_stream_ = wire::tls::server_handshake_stream(stream_len);

  std::size_t offset = 0;
  auto hs_packet = [&](std::size_t size) {
    const std::size_t len = size - hs_packet_overhead();
    Bytes payload;
    wire::append_crypto(payload, offset, ByteView(hs_stream_).subspan(offset, len));
    offset += len;
    return wire::encode_handshake(client_scid_, server_cid_, hs_pn_++, payload);
  };

  const Bytes sh = wire::tls::message(wire::tls::kServerHello, kServerHelloLen - wire::tls::kHeaderLen, 0x20);
  std::vector<Bytes> out;
  if (spec_.coalesce) {
    Bytes payload;
    wire::append_ack(payload, client_initial_pn_);
    wire::append_crypto(payload, 0, sh);
    wire::append_padding(payload, sp);
    Bytes d1 = wire::encode_initial(client_scid_, server_cid_, {}, 0, payload);
    if (d1_hs > 0) {
      Bytes p = hs_packet(d1_hs);
      d1.insert(d1.end(), p.begin(), p.end());
    }
    out.push_back(std::move(d1));
  } else {
    Bytes ack_payload;
    wire::append_ack(ack_payload, client_initial_pn_);
    Bytes d1 = wire::encode_initial(client_scid_, server_cid_, {}, 0, ack_payload);
    d1.insert(d1.end(), pad_ack, 0x00);  // UDP-layer padding
    out.push_back(std::move(d1));
    Bytes sh_payload;
    wire::append_crypto(sh_payload, 0, sh);
    wire::append_padding(sh_payload, pad_sh);
    out.push_back(wire::encode_initial(client_scid_, server_cid_, {}, 1, sh_payload));
  }
  for (std::size_t i = d1_hs > 0 ? 1 : 0; i < hs_sizes.size(); ++i) out.push_back(hs_packet(hs_sizes[i]));

  if (total_size(out) != total) throw std::logic_error("flight layout does not add up");
  return out;
}

Bytes MockConnection::build_resend(std::size_t size) {
  Bytes payload;
  if (size >= hs_packet_min()) {
    const std::size_t want = size - hs_packet_overhead();
    const std::size_t len = std::min(want, hs_stream_.size());
    wire::append_crypto(payload, 0, ByteView(hs_stream_).subspan(0, len));
    wire::append_padding(payload, want - len);
  } else {
    wire::append_ping(payload);
    wire::append_padding(payload, size - resend_packet_min());
  }
  return wire::encode_handshake(client_scid_, server_cid_, hs_pn_++, payload);
}

std::vector<Bytes> MockConnection::start_flight(std::int64_t now_us) {
  state_ = State::kFlight;
  const std::size_t total = spec_.flight_bytes();
  const std::uint64_t budget = 3 * received_unvalidated_;
  std::vector<Bytes> flight;
  std::vector<Bytes> now_send;
  if (validated_ || !spec_.stall_at_limit || total <= budget) {
    now_send = build_flight(total);
  } else {
    flight = build_flight(static_cast<std::size_t>(budget));
    std::size_t sent = 0;
    std::size_t i = 0;
    for (; i < flight.size() && sent + flight[i].size() <= budget; ++i) {
      sent += flight[i].size();
      now_send.push_back(std::move(flight[i]));
    }
    for (; i < flight.size(); ++i) pending_.push_back(std::move(flight[i]));
  }
  first_flight_bytes_ = total_size(now_send);
  if (!validated_ && spec_.resend.kind != ResendKind::kNone)
    resend_at_ = now_us + spec_.resend_interval_us;
  return emit(std::move(now_send));
}

std::vector<Bytes> MockConnection::on_datagram(ByteView datagram, std::int64_t now_us) {
  wire::DecodedDatagram decoded;
  try {
    decoded = wire::decode_datagram(datagram);
  } catch (const ParseError&) {
    return {};
  }
  if (decoded.packets.empty()) return {};
  const auto& first = decoded.packets.front();

  if (state_ == State::kIdle || state_ == State::kAwaitingToken) {
    if (first.kind != PacketKind::kInitial || datagram.size() < kClientMinInitial) return {};
    if (state_ == State::kIdle) client_scid_ = first.scid;
    client_initial_pn_ = first.packet_number;
    if (spec_.retry == RetryMode::kAlways) {
      if (first.token.empty()) {
        if (state_ == State::kIdle) received_unvalidated_ += datagram.size();
        state_ = State::kAwaitingToken;
        return emit({wire::encode_retry(client_scid_, retry_cid_, make_token())});
      }
      if (first.token != make_token()) return {};
      validated_ = true;
      resend_at_.reset();
    } else {
      received_unvalidated_ += datagram.size();
    }
    return start_flight(now_us);
  }

  if (state_ != State::kFlight) return {};

  bool validating = false;
  bool finished = false;
  for (const auto& p : decoded.packets) {
    if (p.kind == PacketKind::kHandshake) validating = true;
    for (const auto& f : p.frames) {
      if (p.kind == PacketKind::kInitial && f.type == FrameType::kAck) validating = true;
      if (p.kind == PacketKind::kHandshake && f.type == FrameType::kCrypto) {
        client_hs_.add(f.offset, f.data);
        finished = client_hs_.has_message(wire::tls::kFinished);
      }
    }
  }
  std::vector<Bytes> out;
  if (!validated_) {
    if (!validating) {
      received_unvalidated_ += datagram.size();
      return {};
    }
    validated_ = true;
    resend_at_.reset();
    out = emit(std::move(pending_));
    pending_.clear();
  }
  if (finished) {
    Bytes payload;
    wire::append_handshake_done(payload);
    out.push_back(wire::encode_short(client_scid_, one_rtt_pn_++, payload));
    sent_total_ += out.back().size();
    state_ = State::kConfirmed;
    confirmed_ = true;
  }
  return out;
}

std::vector<Bytes> MockConnection::on_timer(std::int64_t now_us) {
  if (!resend_at_ || now_us < *resend_at_) return {};
  resend_at_.reset();
  if (validated_ || state_ != State::kFlight) return {};
  if (!resend_planned_) {
    resend_planned_ = true;
    const std::uint64_t cap = spec_.resend.kind == ResendKind::kCapped3x
                                  ? 3 * received_unvalidated_
                                  : spec_.resend.total_bytes;
    const std::uint64_t remaining = cap > sent_unvalidated_ ? cap - sent_unvalidated_ : 0;
    if (remaining >= resend_packet_min())
      resend_queue_ = split_exact(static_cast<std::size_t>(remaining), spec_.max_datagram,
                                  resend_packet_min());
    std::reverse(resend_queue_.begin(), resend_queue_.end());
  }
  std::vector<Bytes> round;
  std::size_t round_bytes = 0;
  const std::size_t target = std::max<std::size_t>(first_flight_bytes_, 1);
  while (!resend_queue_.empty() && round_bytes < target) {
    round.push_back(build_resend(resend_queue_.back()));
    round_bytes += resend_queue_.back();
    resend_queue_.pop_back();
  }
  if (!resend_queue_.empty()) {
    ++resend_round_;
    const double scale = std::pow(spec_.resend_backoff, resend_round_);
    resend_at_ = now_us + static_cast<std::int64_t>(static_cast<double>(spec_.resend_interval_us) * scale);
  }
  return emit(std::move(round));
}

MockEndpoint::MockEndpoint(BehaviorSpec spec) : spec_(std::move(spec)) { validate(spec_); }

std::vector<MockEndpoint::Send> MockEndpoint::on_datagram(const std::string& peer, ByteView datagram,
                                                          std::int64_t now_us) {
  if (!passes_path(spec_, static_cast<std::uint32_t>(datagram.size()))) {
    ++dropped_;
    return {};
  }
  wire::DecodedDatagram decoded;
  try {
    decoded = wire::decode_datagram(datagram);
  } catch (const ParseError&) {
    ++dropped_;
    return {};
  }
  if (decoded.packets.empty() || decoded.packets.front().kind == PacketKind::kOneRtt) {
    ++dropped_;
    return {};
  }
  const Bytes& scid = decoded.packets.front().scid;
  auto key = std::make_pair(peer, scid);
  auto it = connections_.find(key);
  if (it == connections_.end()) {
    Bytes seed(peer.begin(), peer.end());
    seed.insert(seed.end(), scid.begin(), scid.end());
    it = connections_.emplace(key, std::make_unique<MockConnection>(spec_, derive_cid("server", seed))).first;
  }
  std::vector<Send> out;
  for (auto& d : it->second->on_datagram(datagram, now_us)) out.push_back({peer, std::move(d)});
  return out;
}

std::vector<MockEndpoint::Send> MockEndpoint::on_timer(std::int64_t now_us) {
  std::vector<Send> out;
  for (auto& [key, conn] : connections_) {
    for (auto& d : conn->on_timer(now_us)) out.push_back({key.first, std::move(d)});
  }
  return out;
}

std::optional<std::int64_t> MockEndpoint::next_timer() const {
  std::optional<std::int64_t> next;
  for (const auto& [key, conn] : connections_) {
    if (auto t = conn->next_timer(); t && (!next || *t < *next)) next = t;
  }
  return next;
}

const MockConnection* MockEndpoint::find(const std::string& peer, ByteView client_scid) const {
  auto it = connections_.find({peer, Bytes(client_scid.begin(), client_scid.end())});
  return it == connections_.end() ? nullptr : it->second.get();
}

UdpMockServer::UdpMockServer(BehaviorSpec spec, const std::string& bind_address)
    : endpoint_(std::move(spec)) {
  const auto ep = net::parse_endpoint(bind_address, 0);
  sockaddr_in addr = net::to_sockaddr(ep);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw IoError("socket: " + std::string(std::strerror(errno)));
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw IoError("bind " + bind_address + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  host_ = ep.host;
  thread_ = std::thread([this] { run(); });
}

UdpMockServer::~UdpMockServer() {
  stop();
  if (fd_ >= 0) ::close(fd_);
}

std::string UdpMockServer::address() const { return host_ + ":" + std::to_string(port_); }

void UdpMockServer::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void UdpMockServer::run() {
  using Clock = std::chrono::steady_clock;
  const auto epoch = Clock::now();
  auto now_us = [&] {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - epoch).count();
  };
  std::map<std::string, sockaddr_in> peers;
  std::vector<std::uint8_t> buf(65536);
  auto send_all = [&](const std::vector<MockEndpoint::Send>& sends) {
    for (const auto& s : sends) {
      const auto& addr = peers.at(s.peer);
      ::sendto(fd_, s.payload.data(), s.payload.size(), 0,
               reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
    }
  };
  while (!stop_) {
    int timeout_ms = 20;
    if (auto t = endpoint_.next_timer()) {
      const auto wait = (*t - now_us()) / 1000;
      timeout_ms = static_cast<int>(std::clamp<std::int64_t>(wait, 0, 20));
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc > 0 && (pfd.revents & POLLIN)) {
      sockaddr_in from{};
      socklen_t from_len = sizeof(from);
      const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                                reinterpret_cast<sockaddr*>(&from), &from_len);
      if (n > 0) {
        const std::string peer = net::to_string(from);
        peers[peer] = from;
        send_all(endpoint_.on_datagram(peer, ByteView(buf.data(), static_cast<std::size_t>(n)), now_us()));
      }
    }
    send_all(endpoint_.on_timer(now_us()));
  }
}

}  // namespace quicaudit::mock
