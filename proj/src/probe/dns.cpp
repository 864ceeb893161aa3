#include "quicaudit/probe/dns.hpp"

#include <arpa/inet.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <random>

#include "quicaudit/error.hpp"
#include "quicaudit/net.hpp"

namespace quicaudit::probe {

std::string_view to_string(DnsStatus s) {
  switch (s) {
    case DnsStatus::kARecord: return "A_RECORD";
    case DnsStatus::kServfail: return "SERVFAIL";
    case DnsStatus::kNxdomain: return "NXDOMAIN";
    case DnsStatus::kTimeout: return "TIMEOUT";
    case DnsStatus::kRefused: return "REFUSED";
  }
  return "?";
}

DnsStatus parse_dns_status(std::string_view s) {
  for (auto v : {DnsStatus::kARecord, DnsStatus::kServfail, DnsStatus::kNxdomain,
                 DnsStatus::kTimeout, DnsStatus::kRefused})
    if (to_string(v) == s) return v;
  throw ParseError("unknown DNS status '" + std::string(s) + "'", 0);
}

namespace dns {

namespace {

void put16(Bytes& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

std::uint16_t get16(ByteView m, std::size_t at) {
  if (at + 2 > m.size()) throw ParseError("truncated DNS message", at);
  return static_cast<std::uint16_t>(m[at] << 8 | m[at + 1]);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

void put_name(Bytes& b, std::string_view name) {
  std::string n = lower(name);
  std::size_t start = 0;
  while (start < n.size()) {
    auto dot = n.find('.', start);
    if (dot == std::string::npos) dot = n.size();
    const auto len = dot - start;
    if (len == 0 || len > 63) throw ConfigError("invalid DNS name '" + std::string(name) + "'");
    b.push_back(static_cast<std::uint8_t>(len));
    b.insert(b.end(), n.begin() + start, n.begin() + dot);
    start = dot + 1;
  }
  b.push_back(0);
}

// Reads a possibly compressed name; returns the offset after it.
std::size_t read_name(ByteView m, std::size_t at, std::string* out) {
  std::size_t end = 0;
  bool jumped = false;
  int hops = 0;
  std::string name;
  while (true) {
    if (at >= m.size()) throw ParseError("truncated DNS name", at);
    const std::uint8_t len = m[at];
    if ((len & 0xc0) == 0xc0) {
      if (++hops > 16) throw ParseError("DNS name pointer loop", at);
      const std::size_t target = static_cast<std::size_t>(get16(m, at) & 0x3fff);
      if (!jumped) end = at + 2;
      jumped = true;
      at = target;
      continue;
    }
    if (len == 0) {
      if (!jumped) end = at + 1;
      break;
    }
    if (at + 1 + len > m.size()) throw ParseError("truncated DNS label", at);
    if (!name.empty()) name += '.';
    name.append(reinterpret_cast<const char*>(m.data() + at + 1), len);
    at += 1 + len;
  }
  if (out) *out = lower(name);
  return end;
}

}  // namespace

Bytes build_query(std::uint16_t id, std::string_view name) {
  Bytes b;
  put16(b, id);
  put16(b, 0x0100);  // RD
  put16(b, 1);
  put16(b, 0);
  put16(b, 0);
  put16(b, 0);
  put_name(b, name);
  put16(b, 1);  // A
  put16(b, 1);  // IN
  return b;
}

Question parse_query(ByteView msg) {
  Question q;
  q.id = get16(msg, 0);
  if (get16(msg, 4) != 1) throw ParseError("expected one question", 4);
  const std::size_t after = read_name(msg, 12, &q.name);
  q.qtype = get16(msg, after);
  return q;
}

Bytes build_response(const Question& q, std::uint8_t rcode, const std::vector<std::string>& a_records) {
  Bytes b;
  put16(b, q.id);
  put16(b, static_cast<std::uint16_t>(0x8180 | (rcode & 0x0f)));
  put16(b, 1);
  put16(b, static_cast<std::uint16_t>(rcode == 0 && q.qtype == 1 ? a_records.size() : 0));
  put16(b, 0);
  put16(b, 0);
  put_name(b, q.name);
  put16(b, q.qtype);
  put16(b, 1);
  if (rcode != 0 || q.qtype != 1) return b;
  for (const auto& a : a_records) {
    in_addr addr{};
    if (::inet_pton(AF_INET, a.c_str(), &addr) != 1) throw ConfigError("bad A record '" + a + "'");
    put16(b, 0xc00c);
    put16(b, 1);
    put16(b, 1);
    put16(b, 0);
    put16(b, 60);
    put16(b, 4);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&addr.s_addr);
    b.insert(b.end(), p, p + 4);
  }
  return b;
}

Response parse_response(ByteView msg) {
  Response r;
  r.id = get16(msg, 0);
  const std::uint16_t flags = get16(msg, 2);
  if (!(flags & 0x8000)) throw ParseError("not a DNS response", 2);
  r.rcode = flags & 0x0f;
  const std::uint16_t qd = get16(msg, 4);
  const std::uint16_t an = get16(msg, 6);
  std::size_t at = 12;
  for (int i = 0; i < qd; ++i) at = read_name(msg, at, nullptr) + 4;
  for (int i = 0; i < an; ++i) {
    at = read_name(msg, at, nullptr);
    const std::uint16_t type = get16(msg, at);
    const std::uint16_t rdlen = get16(msg, at + 8);
    at += 10;
    if (at + rdlen > msg.size()) throw ParseError("truncated DNS record", at);
    if (type == 1 && rdlen == 4) {
      char buf[INET_ADDRSTRLEN] = {};
      ::inet_ntop(AF_INET, msg.data() + at, buf, sizeof(buf));
      r.a_records.emplace_back(buf);
    }
    at += rdlen;
  }
  return r;
}

}  // namespace dns

DnsOutcome resolve_domain(std::string_view name, std::string_view resolver, double timeout_s) {
  const auto ep = net::parse_endpoint(resolver, 53);
  const sockaddr_in addr = net::to_sockaddr(ep);
  std::random_device rd;
  const auto id = static_cast<std::uint16_t>(rd());
  const Bytes query = dns::build_query(id, name);

  DnsOutcome outcome;
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw IoError("socket: " + std::string(std::strerror(errno)));
  struct Closer {
    int fd;
    ~Closer() { ::close(fd); }
  } closer{fd};
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) return outcome;
  if (::send(fd, query.data(), query.size(), 0) < 0) return outcome;

  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::microseconds(static_cast<std::int64_t>(timeout_s * 1e6));
  std::vector<std::uint8_t> buf(4096);
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) return outcome;
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(left)) <= 0) continue;
    const auto n = ::recv(fd, buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == ECONNREFUSED) return outcome;  // resolver unreachable
      continue;
    }
    dns::Response r;
    try {
      r = dns::parse_response(ByteView(buf.data(), static_cast<std::size_t>(n)));
    } catch (const ParseError&) {
      continue;
    }
    if (r.id != id) continue;
    switch (r.rcode) {
      case 0:
        outcome.status = r.a_records.empty() ? DnsStatus::kNxdomain : DnsStatus::kARecord;
        outcome.addresses = r.a_records;
        break;
      case 3: outcome.status = DnsStatus::kNxdomain; break;
      case 5: outcome.status = DnsStatus::kRefused; break;
      default: outcome.status = DnsStatus::kServfail; break;
    }
    return outcome;
  }
}

StubResolver::StubResolver(std::map<std::string, Entry> zone, const std::string& bind_address) {
  for (auto& [k, v] : zone) {
    std::string key = k;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    zone_[key] = v;
  }
  const auto ep = net::parse_endpoint(bind_address, 0);
  sockaddr_in addr = net::to_sockaddr(ep);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0 || ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw IoError("cannot bind DNS stub on " + bind_address);
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { run(); });
}

StubResolver::~StubResolver() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
  if (fd_ >= 0) ::close(fd_);
}

std::string StubResolver::address() const { return "127.0.0.1:" + std::to_string(port_); }

void StubResolver::run() {
  using Clock = std::chrono::steady_clock;
  struct Pending {
    Clock::time_point at;
    sockaddr_in to;
    Bytes payload;
  };
  std::vector<Pending> pending;
  std::vector<std::uint8_t> buf(4096);
  while (!stop_) {
    const auto now = Clock::now();
    for (auto it = pending.begin(); it != pending.end();) {
      if (it->at <= now) {
        ::sendto(fd_, it->payload.data(), it->payload.size(), 0,
                 reinterpret_cast<const sockaddr*>(&it->to), sizeof(it->to));
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 10) <= 0) continue;
    sockaddr_in from{};
    socklen_t from_len = sizeof(from);
    const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &from_len);
    if (n <= 0) continue;
    dns::Question q;
    try {
      q = dns::parse_query(ByteView(buf.data(), static_cast<std::size_t>(n)));
    } catch (const ParseError&) {
      continue;
    }
    Entry entry = StubResolver::rcode(3);
    if (auto it = zone_.find(q.name); it != zone_.end()) entry = it->second;
    pending.push_back({Clock::now() + entry.delay, from, dns::build_response(q, entry.rcode, entry.addresses)});
  }
}

}  // namespace quicaudit::probe
