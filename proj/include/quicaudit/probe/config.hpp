#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace quicaudit::probe {

enum class ProbeMode : std::uint8_t { kComplete, kNoAck };

std::string_view to_string(ProbeMode m);
ProbeMode parse_probe_mode(std::string_view s);  // "complete" | "no-ack"

struct Target {
  std::string domain;
  std::string ip;  // IPv4 literal, filled by resolution when empty
  std::uint16_t port = 443;

  bool operator==(const Target&) const = default;
};

inline constexpr std::uint32_t kIpv4UdpHeaders = 28;
inline constexpr std::uint32_t kMinInitialSize = 1200;

struct ProbeConfig {
  Target target;
  std::uint32_t initial_size = 1362;
  ProbeMode mode = ProbeMode::kComplete;
  double timeout_s = 10.0;              // COMPLETE mode
  double observation_window_s = 60.0;   // NO_ACK mode
  std::string alpn = "h3";
  bool retry_enabled = true;
  std::uint32_t mtu = 1500;

  std::uint32_t max_initial_size() const { return mtu - kIpv4UdpHeaders; }
  // How long the probe listens in its mode, in microseconds.
  std::int64_t listen_us() const;
};

// Throws ConfigError.
void validate(const ProbeConfig& cfg);

// "1d", "30m", "45s", "250ms", "0" or a bare number of seconds.
double parse_duration_s(std::string_view text);

}  // namespace quicaudit::probe
