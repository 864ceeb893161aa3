#include "quicaudit/net.hpp"

#include <arpa/inet.h>

#include <charconv>

#include "quicaudit/error.hpp"

namespace quicaudit::net {

bool is_ipv4_literal(std::string_view text) {
  in_addr addr{};
  return ::inet_pton(AF_INET, std::string(text).c_str(), &addr) == 1;
}

Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port) {
  Endpoint ep;
  ep.port = default_port;
  const auto colon = text.rfind(':');
  std::string_view host = text;
  if (colon != std::string_view::npos) {
    host = text.substr(0, colon);
    const auto port_text = text.substr(colon + 1);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535)
      throw ConfigError("invalid port in '" + std::string(text) + "'");
    ep.port = static_cast<std::uint16_t>(value);
  }
  if (!is_ipv4_literal(host)) throw ConfigError("not an IPv4 address: '" + std::string(host) + "'");
  ep.host = std::string(host);
  return ep;
}

sockaddr_in to_sockaddr(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  ::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr);
  return addr;
}

std::string to_string(const sockaddr_in& addr) {
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
  return std::string(buf) + ":" + std::to_string(ntohs(addr.sin_port));
}

}  // namespace quicaudit::net
