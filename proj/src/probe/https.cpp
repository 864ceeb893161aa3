#include "quicaudit/probe/https.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <openssl/err.h>
#include <openssl/ssl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <memory>
#include <regex>

#include "quicaudit/net.hpp"

namespace quicaudit::probe {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string Url::to_string() const {
  std::string s = scheme + "://" + host;
  if (port) s += ":" + std::to_string(*port);
  return s + path;
}

Url parse_url(const std::string& text) {
  static const std::regex re(R"(^([A-Za-z][A-Za-z0-9+.-]*)://([^/:?#]+)(?::(\d+))?([^#]*)?)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) throw ConfigError("not an absolute URL: '" + text + "'");
  Url u;
  u.scheme = lower(m[1]);
  if (u.scheme != "http" && u.scheme != "https") throw ConfigError("unsupported scheme in '" + text + "'");
  u.host = lower(m[2]);
  if (m[3].matched) {
    const long p = std::stol(m[3]);
    if (p <= 0 || p > 65535) throw ConfigError("invalid port in '" + text + "'");
    u.port = static_cast<std::uint16_t>(p);
  }
  u.path = m[4].matched && !m[4].str().empty() ? m[4].str() : "/";
  if (u.path.front() != '/') u.path = "/" + u.path;
  return u;
}

Url resolve_url(const Url& base, const std::string& reference) {
  const std::string ref = trim(reference);
  if (ref.find("://") != std::string::npos) return parse_url(ref);
  if (ref.rfind("//", 0) == 0) return parse_url(base.scheme + ":" + ref);
  Url u = base;
  if (ref.empty()) return u;
  if (ref.front() == '/') {
    u.path = ref;
  } else if (ref.front() == '?') {
    u.path = base.path.substr(0, base.path.find('?')) + ref;
  } else {
    const std::string dir = base.path.substr(0, base.path.substr(0, base.path.find('?')).rfind('/') + 1);
    u.path = dir + ref;
  }
  return u;
}

std::optional<std::string> find_meta_refresh(const std::string& html) {
  static const std::regex meta(R"(<meta\b[^>]*>)", std::regex::icase);
  static const std::regex equiv(R"(http-equiv\s*=\s*["']?\s*refresh)", std::regex::icase);
  static const std::regex content(R"re(content\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+)))re", std::regex::icase);
  static const std::regex target(R"(^\s*\d*(?:\.\d*)?\s*[;,]?\s*(?:url\s*=\s*)?['"]?([^'"]+)['"]?\s*$)",
                                 std::regex::icase);
  for (auto it = std::sregex_iterator(html.begin(), html.end(), meta); it != std::sregex_iterator(); ++it) {
    const std::string tag = it->str();
    if (!std::regex_search(tag, equiv)) continue;
    std::smatch c;
    if (!std::regex_search(tag, c, content)) continue;
    const std::string value = c[1].matched ? c[1].str() : c[2].matched ? c[2].str() : c[3].str();
    std::smatch t;
    if (std::regex_match(value, t, target)) {
      std::string url = trim(t[1]);
      if (!url.empty() && !std::all_of(url.begin(), url.end(), [](unsigned char ch) { return std::isdigit(ch); }))
        return url;
    }
  }
  return std::nullopt;
}

HostResolver system_resolver() {
  return [](const std::string& host) -> std::optional<std::string> {
    if (net::is_ipv4_literal(host)) return host;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) return std::nullopt;
    std::string out = net::to_string(*reinterpret_cast<sockaddr_in*>(res->ai_addr));
    ::freeaddrinfo(res);
    return out.substr(0, out.find(':'));
  };
}

std::string_view to_string(RedirectKind k) {
  switch (k) {
    case RedirectKind::kNone: return "none";
    case RedirectKind::kHttp3xx: return "http-3xx";
    case RedirectKind::kMetaRefresh: return "meta-refresh";
  }
  return "?";
}

std::vector<std::string> HttpsCollection::url_path() const {
  std::vector<std::string> out;
  for (const auto& h : path) out.push_back(h.url.to_string());
  return out;
}

namespace {

struct Fd {
  int fd = -1;
  ~Fd() {
    if (fd >= 0) ::close(fd);
  }
};

struct SslDeleter {
  void operator()(SSL* s) const { SSL_free(s); }
  void operator()(SSL_CTX* c) const { SSL_CTX_free(c); }
};

std::string ssl_error_text() {
  std::string out;
  while (unsigned long e = ERR_get_error()) {
    char buf[256];
    ERR_error_string_n(e, buf, sizeof(buf));
    if (!out.empty()) out += "; ";
    out += buf;
  }
  return out.empty() ? "TLS handshake failed" : out;
}

// Non-blocking connect bounded by timeout, then blocking I/O with socket
// timeouts. Returns an error string on failure.
std::optional<std::string> tcp_connect(Fd& sock, const net::Endpoint& ep, double timeout_s) {
  sock.fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (sock.fd < 0) return std::string("socket: ") + std::strerror(errno);
  const int flags = ::fcntl(sock.fd, F_GETFL, 0);
  ::fcntl(sock.fd, F_SETFL, flags | O_NONBLOCK);
  const sockaddr_in addr = net::to_sockaddr(ep);
  if (::connect(sock.fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    if (errno != EINPROGRESS) return std::string("connect: ") + std::strerror(errno);
    pollfd p{sock.fd, POLLOUT, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout_s * 1000));
    if (rc == 0) return std::string("connect: timed out");
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(sock.fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc < 0 || err != 0) return std::string("connect: ") + std::strerror(rc < 0 ? errno : err);
  }
  ::fcntl(sock.fd, F_SETFL, flags);
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout_s);
  tv.tv_usec = static_cast<suseconds_t>((timeout_s - static_cast<double>(tv.tv_sec)) * 1e6);
  ::setsockopt(sock.fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(sock.fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  return std::nullopt;
}

struct Response {
  int status = 0;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;

  std::optional<std::string> header(const std::string& name) const {
    for (const auto& [k, v] : headers)
      if (k == name) return v;
    return std::nullopt;
  }
};

std::string decode_chunked(const std::string& body) {
  std::string out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto eol = body.find("\r\n", pos);
    if (eol == std::string::npos) break;
    std::size_t n = 0;
    try {
      n = std::stoul(body.substr(pos, eol - pos), nullptr, 16);
    } catch (const std::exception&) {
      break;
    }
    if (n == 0) break;
    out += body.substr(eol + 2, n);
    pos = eol + 2 + n + 2;
  }
  return out;
}

std::optional<Response> parse_response(const std::string& raw) {
  const auto head_end = raw.find("\r\n\r\n");
  if (head_end == std::string::npos) return std::nullopt;
  static const std::regex status_line(R"(^HTTP/\d(?:\.\d)?\s+(\d{3}))");
  std::smatch m;
  const std::string head = raw.substr(0, head_end);
  if (!std::regex_search(head, m, status_line)) return std::nullopt;
  Response r;
  r.status = std::stoi(m[1]);
  std::size_t pos = head.find("\r\n");
  while (pos != std::string::npos && pos < head.size()) {
    const auto next = head.find("\r\n", pos + 2);
    const std::string line = head.substr(pos + 2, next == std::string::npos ? std::string::npos : next - pos - 2);
    const auto colon = line.find(':');
    if (colon != std::string::npos) r.headers.emplace_back(lower(trim(line.substr(0, colon))), trim(line.substr(colon + 1)));
    pos = next;
  }
  r.body = raw.substr(head_end + 4);
  if (lower(r.header("transfer-encoding").value_or("")).find("chunked") != std::string::npos)
    r.body = decode_chunked(r.body);
  return r;
}

std::string request_for(const Url& url, std::uint16_t port, std::uint16_t default_port) {
  std::string host = url.host;
  if (port != default_port) host += ":" + std::to_string(port);
  return "GET " + url.path + " HTTP/1.1\r\nHost: " + host +
         "\r\nUser-Agent: quicaudit/1\r\nAccept: text/html,*/*\r\nConnection: close\r\n\r\n";
}

class Fetcher {
 public:
  explicit Fetcher(const HttpsOptions& opt) : opt_(opt), resolver_(opt.resolver ? opt.resolver : system_resolver()) {
    ctx_.reset(SSL_CTX_new(TLS_client_method()));
    if (!ctx_) throw Error("cannot create TLS context: " + ssl_error_text());
    SSL_CTX_set_verify(ctx_.get(), SSL_VERIFY_NONE, nullptr);
    static const unsigned char alpn[] = {8, 'h', 't', 't', 'p', '/', '1', '.', '1'};
    SSL_CTX_set_alpn_protos(ctx_.get(), alpn, sizeof(alpn));
  }

  Hop fetch(const Url& url, const std::string& domain) {
    Hop hop;
    hop.url = url;
    const bool tls = url.scheme == "https";
    const std::uint16_t default_port = tls ? 443 : 80;
    const std::uint16_t port = url.port.value_or(tls ? opt_.https_port : opt_.http_port);
    const auto ip = resolver_(url.host);
    if (!ip) {
      hop.error = "cannot resolve " + url.host;
      return hop;
    }
    const net::Endpoint ep{*ip, port};
    hop.address = ep.to_string();
    Fd sock;
    if (auto err = tcp_connect(sock, ep, opt_.timeout_s)) {
      hop.error = *err;
      return hop;
    }

    std::unique_ptr<SSL, SslDeleter> ssl;
    if (tls) {
      ERR_clear_error();
      ssl.reset(SSL_new(ctx_.get()));
      SSL_set_fd(ssl.get(), sock.fd);
      if (!net::is_ipv4_literal(url.host)) SSL_set_tlsext_host_name(ssl.get(), url.host.c_str());
      if (SSL_connect(ssl.get()) != 1) {
        hop.tls_error = ssl_error_text();
        return hop;
      }
      std::vector<Bytes> ders;
      if (STACK_OF(X509)* stack = SSL_get_peer_cert_chain(ssl.get())) {
        for (int i = 0; i < sk_X509_num(stack); ++i) {
          X509* x = sk_X509_value(stack, i);
          const int len = i2d_X509(x, nullptr);
          Bytes der(static_cast<std::size_t>(len));
          unsigned char* p = der.data();
          i2d_X509(x, &p);
          ders.push_back(std::move(der));
        }
      }
      if (ders.empty()) {
        hop.tls_error = "server sent no certificates";
      } else {
        try {
          hop.chain = cert::chain_from_certs(std::move(ders), domain, cert::ChainSource::kHttps);
        } catch (const Error& e) {
          hop.tls_error = std::string("unparseable certificate chain: ") + e.what();
        }
      }
    }

    const std::string req = request_for(url, port, default_port);
    auto write_all = [&](const std::string& s) {
      return tls ? SSL_write(ssl.get(), s.data(), static_cast<int>(s.size())) == static_cast<int>(s.size())
                 : ::send(sock.fd, s.data(), s.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(s.size());
    };
    if (!write_all(req)) {
      hop.error = "write failed";
      return hop;
    }
    std::string raw;
    char buf[16384];
    while (raw.size() < opt_.max_body) {
      const int n = tls ? SSL_read(ssl.get(), buf, sizeof(buf)) : static_cast<int>(::recv(sock.fd, buf, sizeof(buf), 0));
      if (n <= 0) break;
      raw.append(buf, static_cast<std::size_t>(n));
      if (auto partial = parse_response(raw)) {
        const auto cl = partial->header("content-length");
        if (cl && partial->body.size() >= std::stoul(*cl)) break;
      }
    }
    if (ssl) SSL_shutdown(ssl.get());
    const auto resp = parse_response(raw);
    if (!resp) {
      hop.error = raw.empty() ? "empty HTTP response" : "malformed HTTP response";
      return hop;
    }
    hop.status = resp->status;
    if (resp->status >= 300 && resp->status < 400) {
      if (auto loc = resp->header("location")) {
        hop.redirect = RedirectKind::kHttp3xx;
        hop.location = *loc;
      }
    } else if (resp->status >= 200 && resp->status < 300) {
      if (auto target = find_meta_refresh(resp->body)) {
        hop.redirect = RedirectKind::kMetaRefresh;
        hop.location = *target;
      }
    }
    return hop;
  }

 private:
  const HttpsOptions& opt_;
  HostResolver resolver_;
  std::unique_ptr<SSL_CTX, SslDeleter> ctx_;
};

// Follows redirects from `start`, appending hops to `out`.
void follow(Fetcher& fetcher, Url url, const std::string& domain, const HttpsOptions& opt, std::vector<Hop>& out) {
  int redirects = 0;
  for (;;) {
    Hop hop = fetcher.fetch(url, domain);
    out.push_back(hop);
    if (hop.redirect == RedirectKind::kNone || !hop.location) return;
    Url next;
    try {
      next = resolve_url(url, *hop.location);
    } catch (const ConfigError& e) {
      out.back().error = e.what();
      return;
    }
    if (++redirects > opt.max_redirects) {
      std::vector<std::string> path;
      for (const auto& h : out) path.push_back(h.url.to_string());
      path.push_back(next.to_string());
      throw RedirectLoopError(std::move(path));
    }
    url = std::move(next);
  }
}

}  // namespace

HttpsCollection collect_https_chain(const std::string& domain, const HttpsOptions& options) {
  if (options.max_redirects < 0) throw ConfigError("max_redirects must not be negative");
  if (!(options.timeout_s > 0)) throw ConfigError("timeout must be positive");
  Fetcher fetcher(options);
  HttpsCollection result;
  const std::string host = lower(domain);
  follow(fetcher, Url{"http", host, std::nullopt, "/"}, domain, options, result.path);
  auto last_chain = [&]() -> std::optional<cert::ChainRecord> {
    for (auto it = result.path.rbegin(); it != result.path.rend(); ++it)
      if (it->chain) return it->chain;
    return std::nullopt;
  };
  result.chain = last_chain();
  if (!result.chain) {
    follow(fetcher, Url{"https", host, std::nullopt, "/"}, domain, options, result.path);
    result.chain = last_chain();
  }
  return result;
}

}  // namespace quicaudit::probe
