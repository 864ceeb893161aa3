#pragma once

#include <netinet/in.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace quicaudit::net {

struct Endpoint {
  std::string host;  // dotted IPv4
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
  bool operator==(const Endpoint&) const = default;
};

// "a.b.c.d:port" or "a.b.c.d" (uses default_port). Throws ConfigError.
Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port);

sockaddr_in to_sockaddr(const Endpoint& ep);
std::string to_string(const sockaddr_in& addr);

bool is_ipv4_literal(std::string_view text);

}  // namespace quicaudit::net
