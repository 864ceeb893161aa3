#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "quicaudit/campaign/scan_record.hpp"
#include "quicaudit/clock.hpp"
#include "quicaudit/probe/transport.hpp"

namespace quicaudit::probe {

struct SweepConfig {
  std::uint32_t from = 1200;
  std::uint32_t to = 1472;
  std::uint32_t step = 10;
  double spacing_s = 1800.0;
};

std::vector<std::uint32_t> sweep_sizes(const SweepConfig& sc);

// Probes base.target once per size in order, pausing `spacing_s` between
// probes of the same target. Failures are recorded in the row and the sweep
// goes on. `on_trace`, when set, sees every trace as it completes.
std::vector<campaign::ScanRecord> sweep(
    const ProbeConfig& base, const SweepConfig& sc, QuicTransport& transport, Clock& clock,
    const std::function<void(const handshake::HandshakeTrace&)>& on_trace = {});

}  // namespace quicaudit::probe
