#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <gtest/gtest.h>

#include <thread>

#include "quicaudit/probe/https.hpp"
#include "support/support.hpp"

namespace qa = quicaudit;
using qa::probe::RedirectKind;

namespace {

// Plain and TLS listeners on ephemeral localhost ports.
class HttpFixture {
 public:
  HttpFixture()
      : tls_(qa::testing::data_path("tls-server/chain.pem").c_str(),
             qa::testing::data_path("tls-server/key.pem").c_str()) {
    if (!tls_.is_valid()) throw std::runtime_error("TLS fixture server failed to load its key");
  }
  ~HttpFixture() {
    plain_.stop();
    tls_.stop();
    for (auto& t : threads_) t.join();
  }

  httplib::Server& plain() { return plain_; }
  httplib::SSLServer& tls() { return tls_; }

  void start() {
    plain_port_ = plain_.bind_to_any_port("127.0.0.1");
    tls_port_ = tls_.bind_to_any_port("127.0.0.1");
    threads_.emplace_back([this] { plain_.listen_after_bind(); });
    threads_.emplace_back([this] { tls_.listen_after_bind(); });
    plain_.wait_until_ready();
    tls_.wait_until_ready();
  }

  qa::probe::HttpsOptions options() const {
    qa::probe::HttpsOptions o;
    o.http_port = static_cast<std::uint16_t>(plain_port_);
    o.https_port = static_cast<std::uint16_t>(tls_port_);
    o.timeout_s = 5;
    o.resolver = [](const std::string& host) -> std::optional<std::string> {
      if (host == "example.test" || host == "www.example.test") return "127.0.0.1";
      return std::nullopt;
    };
    return o;
  }

 private:
  httplib::Server plain_;
  httplib::SSLServer tls_;
  int plain_port_ = 0, tls_port_ = 0;
  std::vector<std::thread> threads_;
};

void ok(httplib::Response& res, const std::string& body = "<html><body>hello</body></html>") {
  res.set_content(body, "text/html");
}

}  // namespace

TEST(Url, ParseAndResolve) {
  auto u = qa::probe::parse_url("HTTPS://Example.test:8443/a/b?x=1");
  EXPECT_EQ(u.scheme, "https");
  EXPECT_EQ(u.host, "example.test");
  EXPECT_EQ(u.port, 8443);
  EXPECT_EQ(u.path, "/a/b?x=1");
  EXPECT_EQ(qa::probe::parse_url("http://x.test").path, "/");
  EXPECT_THROW(qa::probe::parse_url("ftp://x.test/"), qa::ConfigError);
  EXPECT_THROW(qa::probe::parse_url("/relative"), qa::ConfigError);

  EXPECT_EQ(qa::probe::resolve_url(u, "/root").to_string(), "https://example.test:8443/root");
  EXPECT_EQ(qa::probe::resolve_url(u, "c").to_string(), "https://example.test:8443/a/c");
  EXPECT_EQ(qa::probe::resolve_url(u, "//other.test/p").to_string(), "https://other.test/p");
  EXPECT_EQ(qa::probe::resolve_url(u, "http://z.test/").to_string(), "http://z.test/");
}

TEST(Url, MetaRefreshVariants) {
  using qa::probe::find_meta_refresh;
  EXPECT_EQ(find_meta_refresh(R"(<META HTTP-EQUIV="Refresh" CONTENT="0; URL=https://a.test/x">)"), "https://a.test/x");
  EXPECT_EQ(find_meta_refresh(R"(<meta content='5;url=/next' http-equiv='refresh'/>)"), "/next");
  EXPECT_EQ(find_meta_refresh(R"(<meta http-equiv=refresh content="0;URL='landing.html'">)"), "landing.html");
  EXPECT_EQ(find_meta_refresh(R"(<meta http-equiv="refresh" content="30">)"), std::nullopt);
  EXPECT_EQ(find_meta_refresh(R"(<meta name="viewport" content="width=device-width">)"), std::nullopt);
}

TEST(HttpsCollector, NoRedirectSingleHttpsHop) {
  HttpFixture fx;
  fx.tls().Get("/", [](const httplib::Request&, httplib::Response& res) { ok(res); });
  fx.start();
  auto opt = fx.options();
  opt.http_port = 1;  // nothing listens on port 80's stand-in
  auto c = qa::probe::collect_https_chain("example.test", opt);
  ASSERT_EQ(c.path.size(), 2u);
  EXPECT_TRUE(c.path[0].error.has_value());
  EXPECT_FALSE(c.path[0].chain.has_value());
  const auto& hop = c.path[1];
  EXPECT_EQ(hop.url.scheme, "https");
  EXPECT_EQ(hop.status, 200);
  ASSERT_TRUE(c.chain.has_value());
  EXPECT_EQ(c.chain->certs.size(), 2u);
  EXPECT_EQ(c.chain->source, qa::cert::ChainSource::kHttps);
  EXPECT_EQ(c.chain->domain, "example.test");

  auto expected = qa::cert::load_chain_file(qa::testing::data_path("tls-server/chain.pem"));
  EXPECT_EQ(qa::cert::to_der(*c.chain), qa::cert::to_der(expected));
}

TEST(HttpsCollector, PermanentRedirectToHttps) {
  HttpFixture fx;
  fx.plain().Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.status = 301;
    res.set_header("Location", "https://example.test/");
  });
  fx.tls().Get("/", [](const httplib::Request&, httplib::Response& res) { ok(res); });
  fx.start();
  auto c = qa::probe::collect_https_chain("example.test", fx.options());
  ASSERT_EQ(c.path.size(), 2u);
  EXPECT_EQ(c.url_path(), (std::vector<std::string>{"http://example.test/", "https://example.test/"}));
  EXPECT_EQ(c.path[0].status, 301);
  EXPECT_EQ(c.path[0].redirect, RedirectKind::kHttp3xx);
  EXPECT_FALSE(c.path[0].chain.has_value());
  ASSERT_TRUE(c.path[1].chain.has_value());
  ASSERT_TRUE(c.chain.has_value());
  EXPECT_EQ(c.chain->certs.size(), 2u);
}

TEST(HttpsCollector, FollowsMetaRefresh) {
  HttpFixture fx;
  fx.plain().Get("/", [](const httplib::Request&, httplib::Response& res) {
    ok(res, R"(<html><head><meta http-equiv="refresh" content="0; url=https://www.example.test/home"></head></html>)");
  });
  fx.tls().Get("/home", [](const httplib::Request& req, httplib::Response& res) {
    ok(res, "host=" + req.get_header_value("Host"));
  });
  fx.start();
  auto c = qa::probe::collect_https_chain("example.test", fx.options());
  ASSERT_EQ(c.path.size(), 2u);
  EXPECT_EQ(c.path[0].redirect, RedirectKind::kMetaRefresh);
  EXPECT_EQ(c.path[1].url.to_string(), "https://www.example.test/home");
  EXPECT_EQ(c.path[1].status, 200);
  EXPECT_TRUE(c.chain.has_value());
}

TEST(HttpsCollector, RedirectLoopStopsAtDepthLimit) {
  HttpFixture fx;
  fx.plain().Get("/a", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/b", 302); });
  fx.plain().Get("/b", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/a", 302); });
  fx.plain().Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/a", 302); });
  fx.start();
  try {
    qa::probe::collect_https_chain("example.test", fx.options());
    FAIL() << "expected RedirectLoopError";
  } catch (const qa::probe::RedirectLoopError& e) {
    ASSERT_EQ(e.path().size(), 12u);  // 11 fetched hops plus the refused target
    EXPECT_EQ(e.path().front(), "http://example.test/");
    EXPECT_EQ(e.path()[1], "http://example.test/a");
    EXPECT_EQ(e.path()[2], "http://example.test/b");
  }
}

TEST(HttpsCollector, TlsFailureRecordedPerHop) {
  HttpFixture fx;
  fx.plain().Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_redirect("https://example.test/", 301);
  });
  fx.start();
  auto opt = fx.options();
  opt.https_port = opt.http_port;  // TLS ClientHello against a plaintext server
  auto c = qa::probe::collect_https_chain("example.test", opt);
  ASSERT_GE(c.path.size(), 2u);
  EXPECT_EQ(c.path[0].status, 301);
  EXPECT_TRUE(c.path[1].tls_error.has_value());
  EXPECT_FALSE(c.chain.has_value());
}

TEST(HttpsCollector, UnresolvableHostRecordedAsError) {
  qa::probe::HttpsOptions opt;
  opt.resolver = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
  auto c = qa::probe::collect_https_chain("nowhere.test", opt);
  ASSERT_EQ(c.path.size(), 2u);
  EXPECT_TRUE(c.path[0].error.has_value());
  EXPECT_TRUE(c.path[1].error.has_value());
  EXPECT_FALSE(c.chain.has_value());
}
