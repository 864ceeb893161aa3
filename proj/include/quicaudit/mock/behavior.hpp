#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "quicaudit/handshake/analysis.hpp"

namespace quicaudit::mock {

enum class RetryMode : std::uint8_t { kNever, kAlways };

enum class ResendKind : std::uint8_t {
  kNone,
  kCapped3x,   // retransmit to an unvalidated client only within 3x
  kUncapped,   // retransmit until total_bytes have been sent
};

struct ResendPolicy {
  ResendKind kind = ResendKind::kNone;
  std::uint64_t total_bytes = 0;  // kUncapped only

  bool operator==(const ResendPolicy&) const = default;
};

// Server behaviour knobs. The server's handshake flight (Initial and
// Handshake packets up to and including its Finished) totals exactly
// chain_len + flight_overhead + superfluous_padding UDP payload bytes; the
// synthetic Certificate message absorbs whatever the fixed handshake
// messages and packet headers leave over.
struct BehaviorSpec {
  std::string name = "custom";
  bool coalesce = true;
  std::uint32_t superfluous_padding = 0;
  RetryMode retry = RetryMode::kNever;
  std::uint32_t chain_len = 2329;
  std::uint32_t flight_overhead = 0;
  ResendPolicy resend;
  bool stall_at_limit = true;
  // Extra bytes added by tunnelling between load balancer and server;
  // client datagrams that no longer fit path_mtu are dropped.
  std::uint32_t encapsulation_overhead = 0;
  std::uint32_t path_mtu = 1500;
  std::uint32_t max_datagram = 1200;
  std::int64_t resend_interval_us = 500'000;
  double resend_backoff = 1.0;

  std::uint64_t flight_bytes() const {
    return std::uint64_t{chain_len} + flight_overhead + superfluous_padding;
  }
  bool operator==(const BehaviorSpec&) const = default;
};

// Throws ConfigError.
void validate(const BehaviorSpec& spec);

inline constexpr std::uint32_t kIpUdpHeaderLen = 28;

// True when a client datagram of udp_len bytes survives the simulated
// encapsulation path.
bool passes_path(const BehaviorSpec& spec, std::uint32_t udp_len);

// Presets: cloudflare, meta, meta-5x, retry, compliant, stall, capped.
std::vector<std::string> preset_names();
BehaviorSpec preset(std::string_view name);

BehaviorSpec behavior_from_json(std::string_view json_text);
std::string behavior_to_json(const BehaviorSpec& spec);
BehaviorSpec load_behavior_file(const std::string& path);

struct Unreachable {
  bool operator==(const Unreachable&) const = default;
};
using ExpectedOutcome = std::variant<handshake::HandshakeClass, Unreachable>;

std::string to_string(const ExpectedOutcome& e);

// Closed-form class of a COMPLETE-mode probe of `spec` at `initial_size`.
ExpectedOutcome expected_class(const BehaviorSpec& spec, std::uint32_t initial_size);

struct GridRow {
  BehaviorSpec spec;
  std::vector<std::pair<std::uint32_t, ExpectedOutcome>> expected;
};

std::vector<std::uint32_t> initial_size_grid(std::uint32_t from = 1200, std::uint32_t to = 1472,
                                             std::uint32_t step = 10);

// The conformance matrix for closed-loop tests.
std::vector<GridRow> behavior_grid(const std::vector<std::uint32_t>& sizes = initial_size_grid());

}  // namespace quicaudit::mock
