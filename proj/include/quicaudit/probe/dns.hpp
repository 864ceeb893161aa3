#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "quicaudit/bytes.hpp"

namespace quicaudit::probe {

enum class DnsStatus : std::uint8_t { kARecord, kServfail, kNxdomain, kTimeout, kRefused };

std::string_view to_string(DnsStatus s);
DnsStatus parse_dns_status(std::string_view s);

struct DnsOutcome {
  DnsStatus status = DnsStatus::kTimeout;
  std::vector<std::string> addresses;  // IPv4, answer order

  bool operator==(const DnsOutcome&) const = default;
};

inline constexpr double kDefaultDnsTimeoutS = 10.0;

// Queries the A record of `name` at resolver "ip[:port]" over UDP. A
// NOERROR answer without A records counts as NXDOMAIN; an unreachable
// resolver is a TIMEOUT. Throws ConfigError for a malformed resolver.
DnsOutcome resolve_domain(std::string_view name, std::string_view resolver,
                          double timeout_s = kDefaultDnsTimeoutS);

namespace dns {

Bytes build_query(std::uint16_t id, std::string_view name);

struct Question {
  std::uint16_t id = 0;
  std::string name;  // lower-case, no trailing dot
  std::uint16_t qtype = 0;
};
// Throws ParseError.
Question parse_query(ByteView msg);

// rcode: 0 NOERROR, 2 SERVFAIL, 3 NXDOMAIN, 5 REFUSED.
Bytes build_response(const Question& q, std::uint8_t rcode, const std::vector<std::string>& a_records);

struct Response {
  std::uint16_t id = 0;
  std::uint8_t rcode = 0;
  std::vector<std::string> a_records;
};
Response parse_response(ByteView msg);

}  // namespace dns

// Small authoritative stub for tests and offline campaigns. Names are
// matched case-insensitively; unknown names get NXDOMAIN.
class StubResolver {
 public:
  struct Entry {
    std::uint8_t rcode = 0;
    std::vector<std::string> addresses;
    std::chrono::milliseconds delay{0};
  };

  explicit StubResolver(std::map<std::string, Entry> zone, const std::string& bind_address = "127.0.0.1:0");
  ~StubResolver();
  StubResolver(const StubResolver&) = delete;
  StubResolver& operator=(const StubResolver&) = delete;

  std::string address() const;
  std::uint16_t port() const { return port_; }

  static Entry a(std::vector<std::string> addresses) { return {0, std::move(addresses), {}}; }
  static Entry rcode(std::uint8_t code) { return {code, {}, {}}; }

 private:
  void run();

  std::map<std::string, Entry> zone_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace quicaudit::probe
