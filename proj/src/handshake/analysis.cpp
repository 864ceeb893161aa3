#include "quicaudit/handshake/analysis.hpp"

#include <algorithm>

#include "quicaudit/error.hpp"

namespace quicaudit::handshake {

namespace {

bool carries_handshake_data(const Datagram& d, bool frames_visible) {
  for (const auto& p : d.packets) {
    if (p.kind != PacketKind::kInitial && p.kind != PacketKind::kHandshake) continue;
    if (!frames_visible) return true;
    for (const auto& f : p.frames)
      if (f.kind == FrameKind::kCrypto && f.crypto_tls_len > 0) return true;
  }
  return false;
}

// Number of client flights (maximal runs of consecutive client datagrams)
// that started before the client held the server's last handshake data.
std::uint32_t client_flights_before_completion(const HandshakeTrace& trace) {
  const auto& ds = trace.datagrams;
  std::size_t last_data = 0;
  bool any = false;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].from_server() && carries_handshake_data(ds[i], trace.frames_visible)) {
      last_data = i;
      any = true;
    }
  }
  if (!any) return 1;
  std::uint32_t flights = 0;
  for (std::size_t i = 0; i < last_data; ++i) {
    if (ds[i].from_client() && (i == 0 || ds[i - 1].from_server())) ++flights;
  }
  return flights;
}

}  // namespace

LimitPolicy LimitPolicy::of(LimitVariant variant) {
  switch (variant) {
    case LimitVariant::kHandshakePackets3:
      return {variant, "draft-ietf-quic-transport-10..12: three Handshake packets"};
    case LimitVariant::kDatagrams3:
      return {variant, "draft-ietf-quic-transport-13..14: three datagrams"};
    case LimitVariant::kBytes3x:
      return {variant, "draft-ietf-quic-transport-15..32: three times the bytes"};
    case LimitVariant::kData3xRfc9000:
      return {variant, "draft-ietf-quic-transport-33..34, RFC 9000: three times the data"};
  }
  throw ConfigError("unknown limit variant");
}

std::vector<LimitPolicy> all_limit_policies() {
  return {LimitPolicy::of(LimitVariant::kHandshakePackets3),
          LimitPolicy::of(LimitVariant::kDatagrams3), LimitPolicy::of(LimitVariant::kBytes3x),
          LimitPolicy::of(LimitVariant::kData3xRfc9000)};
}

std::string_view to_string(LimitVariant v) {
  switch (v) {
    case LimitVariant::kHandshakePackets3: return "HANDSHAKE_PACKETS_3";
    case LimitVariant::kDatagrams3: return "DATAGRAMS_3";
    case LimitVariant::kBytes3x: return "BYTES_3X";
    case LimitVariant::kData3xRfc9000: return "DATA_3X_RFC9000";
  }
  return "?";
}

LimitVariant parse_limit_variant(std::string_view s) {
  for (const auto& p : all_limit_policies())
    if (to_string(p.variant) == s) return p.variant;
  throw ConfigError("unknown limit policy '" + std::string(s) + "'");
}

std::string_view to_string(HandshakeClass c) {
  switch (c) {
    case HandshakeClass::kOneRtt: return "ONE_RTT";
    case HandshakeClass::kRetry: return "RETRY";
    case HandshakeClass::kMultiRtt: return "MULTI_RTT";
    case HandshakeClass::kAmplification: return "AMPLIFICATION";
  }
  return "?";
}

HandshakeClass parse_handshake_class(std::string_view s) {
  for (auto c : {HandshakeClass::kOneRtt, HandshakeClass::kRetry, HandshakeClass::kMultiRtt,
                 HandshakeClass::kAmplification})
    if (to_string(c) == s) return c;
  throw ParseError("unknown handshake class '" + std::string(s) + "'", 0);
}

std::size_t validation_point(const HandshakeTrace& trace) {
  const auto& ds = trace.datagrams;
  if (ds.empty() || !ds.front().from_client() || !ds.front().has_packet(PacketKind::kInitial))
    throw TraceError("first datagram is not a client Initial");
  bool seen_server = false;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].from_server()) {
      seen_server = true;
    } else if (seen_server) {
      return i;
    }
  }
  return ds.size();
}

ByteTotals pre_validation_bytes(const HandshakeTrace& trace) {
  ByteTotals totals;
  const std::size_t end = validation_point(trace);
  for (std::size_t i = 0; i < end; ++i) {
    const auto& d = trace.datagrams[i];
    (d.from_server() ? totals.server : totals.client) += d.udp_payload_len;
  }
  return totals;
}

double amplification_factor(const HandshakeTrace& trace) {
  const auto totals = pre_validation_bytes(trace);
  if (totals.client == 0) throw UndefinedRatioError("no client bytes before validation");
  if (totals.server == 0) return 0.0;
  return static_cast<double>(totals.server) / static_cast<double>(totals.client);
}

LimitCheck limit_check(const HandshakeTrace& trace, const LimitPolicy& policy) {
  const std::size_t end = validation_point(trace);
  LimitCheck check;
  switch (policy.variant) {
    case LimitVariant::kHandshakePackets3: {
      for (std::size_t i = 0; i < end; ++i) {
        const auto& d = trace.datagrams[i];
        if (!d.from_server()) continue;
        check.observed += static_cast<std::uint64_t>(
            std::count_if(d.packets.begin(), d.packets.end(),
                          [](const PacketRecord& p) { return p.kind == PacketKind::kHandshake; }));
      }
      check.allowed = 3;
      check.detail = std::to_string(check.observed) + " server Handshake packets before validation";
      break;
    }
    case LimitVariant::kDatagrams3: {
      for (std::size_t i = 0; i < end; ++i)
        if (trace.datagrams[i].from_server()) ++check.observed;
      check.allowed = 3;
      check.detail = std::to_string(check.observed) + " server datagrams before validation";
      break;
    }
    case LimitVariant::kBytes3x:
    case LimitVariant::kData3xRfc9000: {
      const auto totals = pre_validation_bytes(trace);
      check.observed = totals.server;
      check.allowed = 3 * totals.client;
      check.detail = std::to_string(totals.server) + " server bytes vs " +
                     std::to_string(totals.client) + " client bytes before validation";
      break;
    }
  }
  // Every historical rule is phrased as "more than", so equality complies.
  check.compliant = check.observed <= check.allowed;
  return check;
}

ClassificationResult classify_handshake(const HandshakeTrace& trace, const LimitPolicy& policy) {
  if (trace.outcome == Outcome::kUnreachable || trace.outcome == Outcome::kRefused)
    throw NotClassifiableError(std::string("trace outcome is ") +
                               std::string(to_string(trace.outcome)));
  validate(trace);
  const bool any_server = std::any_of(trace.datagrams.begin(), trace.datagrams.end(),
                                      [](const Datagram& d) { return d.from_server(); });
  if (trace.outcome == Outcome::kTimedOut && !any_server)
    throw NotClassifiableError("timed out without any server datagram");
  bool retry = false;
  for (const auto& d : trace.datagrams) {
    if (!d.from_server()) continue;
    if (d.has_packet(PacketKind::kVersionNegotiation))
      throw NotClassifiableError("version negotiation is not analysed");
    retry = retry || d.has_packet(PacketKind::kRetry);
  }

  ClassificationResult result;
  const auto totals = pre_validation_bytes(trace);
  result.pre_validation_server_bytes = totals.server;
  result.pre_validation_client_bytes = totals.client;
  result.amplification_factor = amplification_factor(trace);
  result.limit_exceeded = !limit_check(trace, policy).compliant;
  result.client_flights = client_flights_before_completion(trace);
  result.multi_rtt_flag = result.client_flights >= 2;

  if (retry) {
    result.klass = HandshakeClass::kRetry;
  } else if (result.limit_exceeded) {
    result.klass = HandshakeClass::kAmplification;
  } else if (result.multi_rtt_flag) {
    result.klass = HandshakeClass::kMultiRtt;
  } else {
    result.klass = HandshakeClass::kOneRtt;
  }
  return result;
}

PayloadDecomposition payload_decomposition(const HandshakeTrace& trace) {
  if (!trace.frames_visible)
    throw CapabilityMissingError("frame summaries were not captured for this trace");
  validate(trace);
  PayloadDecomposition out;
  const std::size_t end = validation_point(trace);
  for (std::size_t i = 0; i < end; ++i) {
    const auto& d = trace.datagrams[i];
    if (!d.from_server()) continue;
    out.padding_bytes += d.trailing_padding;
    for (const auto& p : d.packets) {
      std::uint64_t frame_bytes = 0;
      for (const auto& f : p.frames) {
        frame_bytes += f.payload_len;
        switch (f.kind) {
          case FrameKind::kCrypto:
            out.tls_bytes += f.crypto_tls_len;
            out.quic_header_bytes += f.payload_len - f.crypto_tls_len;
            break;
          case FrameKind::kPadding:
            out.padding_bytes += f.payload_len;
            break;
          case FrameKind::kAck:
            out.ack_overhead_bytes += f.payload_len;
            break;
          case FrameKind::kOther:
            out.quic_header_bytes += f.payload_len;
            break;
        }
      }
      out.quic_header_bytes += p.wire_len - frame_bytes;
    }
  }
  return out;
}

CoalescenceReport coalescence_report(const HandshakeTrace& trace) {
  CoalescenceReport report;
  for (const auto& d : trace.datagrams) {
    if (!d.from_server()) continue;
    const auto n = static_cast<std::uint32_t>(d.packets.size());
    ++report.packets_per_datagram[n];
    report.max_packets_per_datagram = std::max(report.max_packets_per_datagram, n);
    if (d.has_packet(PacketKind::kInitial) && d.has_packet(PacketKind::kHandshake))
      report.coalesces_initial_and_handshake = true;
    if (!trace.frames_visible || d.packets.empty()) continue;
    bool ack_only = true;
    bool has_ack = false;
    for (const auto& p : d.packets) {
      if (p.kind != PacketKind::kInitial) {
        ack_only = false;
        break;
      }
      for (const auto& f : p.frames) {
        if (f.kind == FrameKind::kAck) {
          has_ack = true;
        } else if (f.kind != FrameKind::kPadding) {
          ack_only = false;
        }
      }
    }
    if (ack_only && has_ack) report.ack_only_initial_datagram = true;
  }
  report.separate_ack_flight =
      report.ack_only_initial_datagram && !report.coalesces_initial_and_handshake;
  return report;
}

std::vector<BrowserProfile> known_browser_profiles() {
  return {
      {"Firefox", 1357, {}},
      {"Chromium", 1250, {"brotli"}},
  };
}

}  // namespace quicaudit::handshake
