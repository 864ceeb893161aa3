#include "quicaudit/probe/session.hpp"

#include <algorithm>

#include "quicaudit/error.hpp"

namespace quicaudit::probe {

using handshake::Direction;
using handshake::Outcome;
using handshake::PacketKind;
using wire::FrameType;

ProbeSession::ProbeSession(ProbeConfig cfg, Bytes client_cid, Bytes initial_dcid)
    : cfg_(std::move(cfg)), client_cid_(std::move(client_cid)), dcid_(std::move(initial_dcid)) {
  validate(cfg_);
  trace_.client_initial_size = cfg_.initial_size;
  trace_.target = cfg_.target.domain.empty() ? cfg_.target.ip : cfg_.target.domain;
}

Bytes ProbeSession::build_initial(std::uint32_t pn, ByteView token, std::size_t size) const {
  const Bytes hello = wire::tls::message(wire::tls::kClientHello,
                                         wire::tls::kClientHelloLen - wire::tls::kHeaderLen, 0x11);
  Bytes payload;
  wire::append_crypto(payload, 0, hello);
  const std::size_t fixed = wire::initial_overhead(token.size()) + payload.size();
  if (size < fixed) throw ConfigError("Initial size too small for ClientHello");
  wire::append_padding(payload, size - fixed);
  return wire::encode_initial(dcid_, client_cid_, token, pn, payload);
}

Bytes ProbeSession::start(std::int64_t now_us) {
  if (started_) throw std::logic_error("probe already started");
  started_ = true;
  deadline_us_ = now_us + cfg_.listen_us();
  Bytes d = build_initial(initial_pn_++, {}, cfg_.initial_size);
  record(Direction::kClientToServer, d, now_us);
  return d;
}

void ProbeSession::record(Direction dir, ByteView datagram, std::int64_t now_us) {
  try {
    trace_.datagrams.push_back(
        wire::to_trace_datagram(wire::decode_datagram(datagram), dir, now_us, datagram.size()));
  } catch (const ParseError&) {
    trace_.datagrams.push_back(handshake::opaque_datagram(
        dir, now_us, static_cast<std::uint32_t>(datagram.size()), PacketKind::kOneRtt));
  }
}

std::vector<Bytes> ProbeSession::on_datagram(ByteView datagram, std::int64_t now_us) {
  if (!started_ || done_) return {};
  any_server_datagram_ = true;
  record(Direction::kServerToClient, datagram, now_us);
  wire::DecodedDatagram decoded;
  try {
    decoded = wire::decode_datagram(datagram);
  } catch (const ParseError&) {
    return {};
  }
  std::vector<Bytes> out;
  for (const auto& p : decoded.packets) {
    switch (p.kind) {
      case PacketKind::kRetry:
        if (cfg_.mode == ProbeMode::kComplete && cfg_.retry_enabled && !retried_ &&
            !largest_initial_) {
          retried_ = true;
          token_ = p.token;
          dcid_ = p.scid;
          Bytes d = build_initial(initial_pn_++, token_, cfg_.initial_size);
          record(Direction::kClientToServer, d, now_us);
          out.push_back(std::move(d));
        }
        break;
      case PacketKind::kInitial:
        dcid_ = p.scid;
        largest_initial_ = std::max(largest_initial_.value_or(0), p.packet_number);
        initial_ack_pending_ = true;
        break;
      case PacketKind::kHandshake:
        largest_hs_ = std::max(largest_hs_.value_or(0), p.packet_number);
        hs_ack_pending_ = true;
        for (const auto& f : p.frames)
          if (f.type == FrameType::kCrypto) server_hs_.add(f.offset, f.data);
        break;
      case PacketKind::kOneRtt:
        if (p.dcid != client_cid_) {
          trace_.stateless_reset = true;
          break;
        }
        for (const auto& f : p.frames) {
          if (f.type == FrameType::kHandshakeDone && finished_sent_) {
            trace_.handshake_confirmed_time_us = now_us;
            trace_.outcome = Outcome::kCompleted;
            done_ = true;
          }
        }
        break;
      case PacketKind::kVersionNegotiation:
        break;
    }
  }
  if (cfg_.mode == ProbeMode::kComplete && !done_ && (initial_ack_pending_ || hs_ack_pending_))
    ack_at_ = now_us + kAckDelayUs;
  return out;
}

Bytes ProbeSession::build_ack_flight() {
  Bytes hs;
  if (hs_ack_pending_ || (!finished_sent_ && server_hs_.has_message(wire::tls::kFinished))) {
    Bytes payload;
    if (largest_hs_) wire::append_ack(payload, *largest_hs_);
    if (!finished_sent_ && server_hs_.has_message(wire::tls::kFinished)) {
      const Bytes fin = wire::tls::message(wire::tls::kFinished,
                                           wire::tls::kFinishedLen - wire::tls::kHeaderLen, 0x33);
      wire::append_crypto(payload, 0, fin);
      finished_sent_ = true;
    }
    hs = wire::encode_handshake(dcid_, client_cid_, hs_pn_++, payload);
    hs_ack_pending_ = false;
  }
  Bytes out;
  if (initial_ack_pending_) {
    // Datagrams carrying a client Initial are padded to 1200 bytes.
    Bytes payload;
    wire::append_ack(payload, *largest_initial_);
    const std::size_t fixed = wire::initial_overhead(token_.size()) + payload.size() + hs.size();
    if (fixed < kMinInitialSize) wire::append_padding(payload, kMinInitialSize - fixed);
    out = wire::encode_initial(dcid_, client_cid_, token_, initial_pn_++, payload);
    initial_ack_pending_ = false;
  }
  out.insert(out.end(), hs.begin(), hs.end());
  return out;
}

std::vector<Bytes> ProbeSession::on_timer(std::int64_t now_us) {
  if (!started_ || done_) return {};
  if (now_us >= deadline_us_) {
    done_ = true;
    trace_.outcome = any_server_datagram_ ? Outcome::kTimedOut : Outcome::kUnreachable;
    return {};
  }
  if (!ack_at_ || now_us < *ack_at_) return {};
  ack_at_.reset();
  Bytes d = build_ack_flight();
  if (d.empty()) return {};
  record(Direction::kClientToServer, d, now_us);
  return {std::move(d)};
}

std::optional<std::int64_t> ProbeSession::next_timer() const {
  if (!started_ || done_) return std::nullopt;
  if (ack_at_) return std::min(*ack_at_, deadline_us_);
  return deadline_us_;
}

void ProbeSession::mark_refused() {
  refused_ = true;
  if (!any_server_datagram_) {
    done_ = true;
    trace_.outcome = Outcome::kRefused;
  }
}

handshake::HandshakeTrace ProbeSession::finish() {
  if (!done_) {
    done_ = true;
    trace_.outcome = any_server_datagram_ ? Outcome::kTimedOut
                                          : (refused_ ? Outcome::kRefused : Outcome::kUnreachable);
  }
  return trace_;
}

}  // namespace quicaudit::probe
