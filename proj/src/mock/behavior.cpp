#include "quicaudit/mock/behavior.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "quicaudit/error.hpp"

namespace quicaudit::mock {

using handshake::HandshakeClass;
using nlohmann::json;

void validate(const BehaviorSpec& spec) {
  if (spec.resend.kind == ResendKind::kUncapped && spec.resend.total_bytes == 0)
    throw ConfigError("uncapped resend policy needs total_bytes > 0");
  if (spec.resend.kind == ResendKind::kCapped3x && !spec.stall_at_limit)
    throw ConfigError("capped resends require stall_at_limit");
  if (spec.max_datagram < 1200 || spec.max_datagram > 65527)
    throw ConfigError("max_datagram outside [1200, 65527]");
  if (spec.path_mtu < 1280) throw ConfigError("path_mtu below 1280");
  if (spec.resend_interval_us <= 0) throw ConfigError("resend interval must be positive");
  if (spec.resend_backoff < 1.0) throw ConfigError("resend backoff below 1");
  if (spec.chain_len + std::uint64_t{spec.flight_overhead} < 400)
    throw ConfigError("handshake flight below 400 bytes cannot be laid out");
}

bool passes_path(const BehaviorSpec& spec, std::uint32_t udp_len) {
  return std::uint64_t{udp_len} + kIpUdpHeaderLen + spec.encapsulation_overhead <= spec.path_mtu;
}

std::vector<std::string> preset_names() {
  return {"cloudflare", "meta", "meta-5x", "retry", "compliant", "stall", "capped"};
}

BehaviorSpec preset(std::string_view name) {
  BehaviorSpec s;
  s.name = std::string(name);
  if (name == "cloudflare") {
    // Initial ACK in its own padded datagram, no Initial/Handshake
    // coalescence, whole flight sent regardless of the limit.
    s.coalesce = false;
    s.superfluous_padding = 2462;
    s.stall_at_limit = false;
  } else if (name == "meta") {
    s.resend = {ResendKind::kUncapped, 35'056};
  } else if (name == "meta-5x") {
    s.resend = {ResendKind::kUncapped, 7'000};
  } else if (name == "retry") {
    s.retry = RetryMode::kAlways;
  } else if (name == "compliant") {
  } else if (name == "stall") {
    s.chain_len = 3900;
  } else if (name == "capped") {
    s.resend = {ResendKind::kCapped3x, 0};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return s;
}

namespace {

std::string_view to_string(ResendKind k) {
  switch (k) {
    case ResendKind::kNone: return "none";
    case ResendKind::kCapped3x: return "capped_3x";
    case ResendKind::kUncapped: return "uncapped";
  }
  return "?";
}

ResendKind parse_resend_kind(const std::string& s) {
  if (s == "none") return ResendKind::kNone;
  if (s == "capped_3x") return ResendKind::kCapped3x;
  if (s == "uncapped") return ResendKind::kUncapped;
  throw ConfigError("unknown resend policy '" + s + "'");
}

}  // namespace

BehaviorSpec behavior_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid behavior JSON: ") + e.what());
  }
  BehaviorSpec s = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : BehaviorSpec{};
  try {
    s.name = j.value("name", s.name);
    s.coalesce = j.value("coalesce", s.coalesce);
    s.superfluous_padding = j.value("superfluous_padding", s.superfluous_padding);
    if (j.contains("retry")) s.retry = j.at("retry").get<std::string>() == "always" ? RetryMode::kAlways : RetryMode::kNever;
    s.chain_len = j.value("chain_len", s.chain_len);
    s.flight_overhead = j.value("flight_overhead", s.flight_overhead);
    if (j.contains("resend_policy")) {
      const auto& r = j.at("resend_policy");
      s.resend.kind = parse_resend_kind(r.at("kind").get<std::string>());
      s.resend.total_bytes = r.value("total_bytes", std::uint64_t{0});
    }
    s.stall_at_limit = j.value("stall_at_limit", s.stall_at_limit);
    s.encapsulation_overhead = j.value("encapsulation_overhead", s.encapsulation_overhead);
    s.path_mtu = j.value("path_mtu", s.path_mtu);
    s.max_datagram = j.value("max_datagram", s.max_datagram);
    s.resend_interval_us = j.value("resend_interval_us", s.resend_interval_us);
    s.resend_backoff = j.value("resend_backoff", s.resend_backoff);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed behavior spec: ") + e.what());
  }
  validate(s);
  return s;
}

std::string behavior_to_json(const BehaviorSpec& s) {
  json j = {{"name", s.name},
            {"coalesce", s.coalesce},
            {"superfluous_padding", s.superfluous_padding},
            {"retry", s.retry == RetryMode::kAlways ? "always" : "never"},
            {"chain_len", s.chain_len},
            {"flight_overhead", s.flight_overhead},
            {"resend_policy", {{"kind", to_string(s.resend.kind)}, {"total_bytes", s.resend.total_bytes}}},
            {"stall_at_limit", s.stall_at_limit},
            {"encapsulation_overhead", s.encapsulation_overhead},
            {"path_mtu", s.path_mtu},
            {"max_datagram", s.max_datagram},
            {"resend_interval_us", s.resend_interval_us},
            {"resend_backoff", s.resend_backoff}};
  return j.dump(2);
}

BehaviorSpec load_behavior_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return behavior_from_json(ss.str());
}

std::string to_string(const ExpectedOutcome& e) {
  if (std::holds_alternative<Unreachable>(e)) return "UNREACHABLE";
  return std::string(handshake::to_string(std::get<HandshakeClass>(e)));
}

ExpectedOutcome expected_class(const BehaviorSpec& spec, std::uint32_t initial_size) {
  if (!passes_path(spec, initial_size)) return Unreachable{};
  if (spec.retry == RetryMode::kAlways) return HandshakeClass::kRetry;
  const std::uint64_t budget = 3ull * initial_size;
  if (spec.flight_bytes() <= budget) return HandshakeClass::kOneRtt;
  return spec.stall_at_limit ? HandshakeClass::kMultiRtt : HandshakeClass::kAmplification;
}

std::vector<std::uint32_t> initial_size_grid(std::uint32_t from, std::uint32_t to,
                                             std::uint32_t step) {
  if (step == 0 || from > to) throw ConfigError("invalid size grid");
  std::vector<std::uint32_t> sizes;
  for (std::uint32_t s = from; s <= to; s += step) sizes.push_back(s);
  return sizes;
}

std::vector<GridRow> behavior_grid(const std::vector<std::uint32_t>& sizes) {
  std::vector<BehaviorSpec> specs;
  specs.push_back(preset("compliant"));
  specs.back().name = "compliant-small";
  specs.push_back(preset("retry"));
  specs.back().name = "retry-always";
  specs.push_back(preset("cloudflare"));
  specs.back().name = "cloudflare-like";
  specs.push_back(preset("meta"));
  specs.back().name = "meta-like";
  specs.push_back(preset("capped"));
  for (std::uint32_t chain : {3900u, 5000u}) {
    auto s = preset("stall");
    s.chain_len = chain;
    s.name = "stall-on-large-cert(" + std::to_string(chain) + ")";
    specs.push_back(s);
  }
  {
    BehaviorSpec s;
    s.name = "amplify-8340";
    s.chain_len = 8340;
    s.stall_at_limit = false;
    specs.push_back(s);
  }
  {
    auto s = preset("compliant");
    s.name = "encapsulated(80)";
    s.encapsulation_overhead = 80;
    specs.push_back(s);
  }

  std::vector<GridRow> rows;
  for (auto& spec : specs) {
    GridRow row{spec, {}};
    for (auto size : sizes) row.expected.emplace_back(size, expected_class(spec, size));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace quicaudit::mock
