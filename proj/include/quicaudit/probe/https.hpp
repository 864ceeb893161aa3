#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "quicaudit/cert/chain.hpp"
#include "quicaudit/error.hpp"

namespace quicaudit::probe {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  std::optional<std::uint16_t> port;
  std::string path = "/";

  std::string to_string() const;
  bool operator==(const Url&) const = default;
};

// Throws ConfigError for anything but http(s) URLs.
Url parse_url(const std::string& text);
// Resolves a Location or meta-refresh target against the current URL.
Url resolve_url(const Url& base, const std::string& reference);

// Target of an HTML <meta http-equiv="refresh" content="N; url=..."> tag.
std::optional<std::string> find_meta_refresh(const std::string& html);

// Host name to IPv4 literal; nullopt when unresolvable.
using HostResolver = std::function<std::optional<std::string>(const std::string& host)>;
HostResolver system_resolver();

struct HttpsOptions {
  std::uint16_t http_port = 80;
  std::uint16_t https_port = 443;
  int max_redirects = 10;
  double timeout_s = 10.0;
  std::size_t max_body = 1 << 20;
  HostResolver resolver;  // empty: system resolver
};

enum class RedirectKind : std::uint8_t { kNone, kHttp3xx, kMetaRefresh };
std::string_view to_string(RedirectKind k);

struct Hop {
  Url url;
  std::string address;  // ip:port actually contacted
  std::optional<int> status;
  RedirectKind redirect = RedirectKind::kNone;  // how this hop points onward
  std::optional<std::string> location;
  std::optional<cert::ChainRecord> chain;  // HTTPS hops with a completed TLS handshake
  std::optional<std::string> tls_error;
  std::optional<std::string> error;  // DNS, connect or HTTP failure
};

struct HttpsCollection {
  std::vector<Hop> path;
  // Chain of the last HTTPS hop on the path that completed TLS.
  std::optional<cert::ChainRecord> chain;

  std::vector<std::string> url_path() const;
};

class RedirectLoopError : public Error {
 public:
  RedirectLoopError(std::vector<std::string> path)
      : Error("redirect depth exceeded after " + std::to_string(path.size()) + " hops"), path_(std::move(path)) {}
  const std::vector<std::string>& path() const { return path_; }

 private:
  std::vector<std::string> path_;
};

// Starts at http://domain/ and follows 3xx and meta-refresh redirects. If
// that path yields no certificate chain, starts over at https://domain/.
// Throws RedirectLoopError once more than max_redirects redirects are chained.
HttpsCollection collect_https_chain(const std::string& domain, const HttpsOptions& options = {});

}  // namespace quicaudit::probe
