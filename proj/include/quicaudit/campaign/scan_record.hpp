#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quicaudit/handshake/analysis.hpp"
#include "quicaudit/handshake/trace.hpp"
#include "quicaudit/probe/dns.hpp"

namespace quicaudit::campaign {

// One probe outcome row. For an attempted QUIC probe exactly one of
// `quic` and `error` is set.
struct ScanRecord {
  std::string domain;
  std::uint64_t rank = 1;
  std::uint32_t initial_size = 0;
  probe::DnsOutcome dns;
  bool https_ok = false;
  std::optional<std::uint64_t> chain_len;
  std::string chain_ref;  // relative path of the PEM bundle, empty if none
  bool quic_attempted = false;
  std::optional<handshake::Outcome> probe_outcome;
  std::optional<handshake::ClassificationResult> quic;
  std::int64_t started_us = 0;
  std::int64_t finished_us = 0;
  std::optional<std::string> error;

  bool quic_reachable() const { return quic.has_value(); }
  bool operator==(const ScanRecord&) const = default;
};

// Throws ConfigError when the record violates its invariants.
void validate(const ScanRecord& r);

// Fills probe_outcome/quic/error from a finished probe trace.
void attach_trace(ScanRecord& r, const handshake::HandshakeTrace& trace,
                  const handshake::LimitPolicy& policy = handshake::LimitPolicy::rfc9000());

}  // namespace quicaudit::campaign
