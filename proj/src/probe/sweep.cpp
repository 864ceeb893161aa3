#include "quicaudit/probe/sweep.hpp"

#include <cmath>

#include "quicaudit/error.hpp"

namespace quicaudit::probe {

std::vector<std::uint32_t> sweep_sizes(const SweepConfig& sc) {
  if (sc.step == 0 || sc.from > sc.to) throw ConfigError("invalid sweep range");
  std::vector<std::uint32_t> sizes;
  for (std::uint32_t s = sc.from; s <= sc.to; s += sc.step) sizes.push_back(s);
  return sizes;
}

std::vector<campaign::ScanRecord> sweep(
    const ProbeConfig& base, const SweepConfig& sc, QuicTransport& transport, Clock& clock,
    const std::function<void(const handshake::HandshakeTrace&)>& on_trace) {
  const auto sizes = sweep_sizes(sc);
  if (!(sc.spacing_s >= 0)) throw ConfigError("spacing must not be negative");
  SpacingLimiter limiter(clock, static_cast<std::int64_t>(std::llround(sc.spacing_s * 1e6)));
  const std::string key = base.target.domain + "|" + base.target.ip + ":" + std::to_string(base.target.port);

  std::vector<campaign::ScanRecord> records;
  for (auto size : sizes) {
    campaign::ScanRecord r;
    r.domain = base.target.domain.empty() ? base.target.ip : base.target.domain;
    r.initial_size = size;
    r.dns.status = DnsStatus::kARecord;
    if (!base.target.ip.empty()) r.dns.addresses = {base.target.ip};
    r.started_us = limiter.acquire(key);
    r.quic_attempted = true;
    ProbeConfig cfg = base;
    cfg.initial_size = size;
    try {
      const auto trace = probe_once(cfg, transport);
      if (on_trace) on_trace(trace);
      campaign::attach_trace(r, trace);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.finished_us = std::max(clock.now_us(), r.started_us);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace quicaudit::probe
