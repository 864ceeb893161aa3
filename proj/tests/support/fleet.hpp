#pragma once

#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "quicaudit/mock/server.hpp"
#include "quicaudit/probe/dns.hpp"

namespace httplib {
class SSLServer;
}

namespace quicaudit::testing {

// A set of UDP mock servers on 127.0.0.2, 127.0.0.3, ... sharing one port,
// a stub resolver mapping each domain to its server, and one HTTPS server
// answering for all of them.
class MockFleet {
 public:
  struct Member {
    std::string domain;
    mock::BehaviorSpec spec;
    std::string ip;
  };

  // `unresolvable` names get NXDOMAIN; `servfail` names get SERVFAIL.
  MockFleet(const std::vector<std::pair<std::string, mock::BehaviorSpec>>& members,
            const std::vector<std::string>& servfail = {});
  ~MockFleet();

  const std::vector<Member>& members() const { return members_; }
  std::uint16_t quic_port() const { return quic_port_; }
  std::uint16_t https_port() const { return https_port_; }
  std::string resolver() const { return dns_->address(); }

 private:
  std::vector<Member> members_;
  std::vector<std::unique_ptr<mock::UdpMockServer>> servers_;
  std::unique_ptr<probe::StubResolver> dns_;
  std::unique_ptr<httplib::SSLServer> https_;
  std::thread https_thread_;
  std::uint16_t quic_port_ = 0;
  std::uint16_t https_port_ = 0;
};

// The ten behaviours used by campaign tests, one per domain.
std::vector<std::pair<std::string, mock::BehaviorSpec>> ten_domain_fleet();

}  // namespace quicaudit::testing
