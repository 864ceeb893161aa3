#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "support/fleet.hpp"

#include <httplib.h>

#include <stdexcept>

#include "support/support.hpp"

namespace quicaudit::testing {

MockFleet::MockFleet(const std::vector<std::pair<std::string, mock::BehaviorSpec>>& members,
                     const std::vector<std::string>& servfail) {
  std::map<std::string, probe::StubResolver::Entry> zone;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const std::string ip = "127.0.0." + std::to_string(i + 2);
    const std::string bind = ip + ":" + std::to_string(quic_port_);
    servers_.push_back(std::make_unique<mock::UdpMockServer>(members[i].second, bind));
    if (i == 0) quic_port_ = servers_.front()->port();
    members_.push_back({members[i].first, members[i].second, ip});
    zone[members[i].first] = probe::StubResolver::a({ip});
  }
  for (const auto& name : servfail) zone[name] = probe::StubResolver::rcode(2);
  dns_ = std::make_unique<probe::StubResolver>(zone);

  https_ = std::make_unique<httplib::SSLServer>(data_path("tls-server/chain.pem").c_str(),
                                                data_path("tls-server/key.pem").c_str());
  if (!https_->is_valid()) throw std::runtime_error("fleet HTTPS server has no usable key");
  https_->Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html><body>fleet</body></html>", "text/html");
  });
  https_port_ = static_cast<std::uint16_t>(https_->bind_to_any_port("0.0.0.0"));
  https_thread_ = std::thread([this] { https_->listen_after_bind(); });
  https_->wait_until_ready();
}

MockFleet::~MockFleet() {
  https_->stop();
  if (https_thread_.joinable()) https_thread_.join();
}

std::vector<std::pair<std::string, mock::BehaviorSpec>> ten_domain_fleet() {
  std::vector<std::pair<std::string, mock::BehaviorSpec>> out;
  for (const auto& row : mock::behavior_grid({1362})) {
    std::string domain;
    for (char c : row.spec.name) domain += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
    while (!domain.empty() && domain.back() == '-') domain.pop_back();
    out.emplace_back(domain + ".test", row.spec);
  }
  out.emplace_back("meta-5x.test", mock::preset("meta-5x"));
  return out;
}

}  // namespace quicaudit::testing
