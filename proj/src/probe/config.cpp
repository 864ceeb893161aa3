#include "quicaudit/probe/config.hpp"

#include <cmath>
#include <cstdlib>

#include "quicaudit/error.hpp"

namespace quicaudit::probe {

std::string_view to_string(ProbeMode m) {
  return m == ProbeMode::kComplete ? "complete" : "no-ack";
}

ProbeMode parse_probe_mode(std::string_view s) {
  if (s == "complete") return ProbeMode::kComplete;
  if (s == "no-ack" || s == "no_ack") return ProbeMode::kNoAck;
  throw ConfigError("unknown probe mode '" + std::string(s) + "'");
}

std::int64_t ProbeConfig::listen_us() const {
  const double s = mode == ProbeMode::kComplete ? timeout_s : observation_window_s;
  return static_cast<std::int64_t>(std::llround(s * 1e6));
}

void validate(const ProbeConfig& cfg) {
  if (cfg.mtu < kMinInitialSize + kIpv4UdpHeaders)
    throw ConfigError("MTU too small for a 1200-byte Initial");
  if (cfg.initial_size < kMinInitialSize || cfg.initial_size > cfg.max_initial_size())
    throw ConfigError("initial size " + std::to_string(cfg.initial_size) + " outside [1200, " +
                      std::to_string(cfg.max_initial_size()) + "]");
  if (!(cfg.timeout_s > 0)) throw ConfigError("timeout must be positive");
  if (!(cfg.observation_window_s > 0)) throw ConfigError("observation window must be positive");
  if (cfg.target.port == 0) throw ConfigError("target port must be non-zero");
}

double parse_duration_s(std::string_view text) {
  if (text.empty()) throw ConfigError("empty duration");
  std::string s(text);
  double scale = 1.0;
  auto strip = [&](std::string_view suffix, double factor) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      s.resize(s.size() - suffix.size());
      scale = factor;
      return true;
    }
    return false;
  };
  strip("ms", 1e-3) || strip("s", 1.0) || strip("m", 60.0) || strip("h", 3600.0) || strip("d", 86400.0);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !(v >= 0) || !std::isfinite(v))
    throw ConfigError("invalid duration '" + std::string(text) + "'");
  return v * scale;
}

}  // namespace quicaudit::probe
