#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "quicaudit/bytes.hpp"
#include "quicaudit/mock/behavior.hpp"
#include "quicaudit/wire/packet.hpp"

namespace quicaudit::mock {

// Splits `total` into parts within [min_part, max_part] summing to total.
// Requires total >= min_part and max_part >= 2 * min_part.
std::vector<std::size_t> split_exact(std::size_t total, std::size_t max_part, std::size_t min_part);

// One server-side connection. Sans-IO: the caller feeds datagrams and timer
// expirations and transmits whatever comes back.
class MockConnection {
 public:
  MockConnection(BehaviorSpec spec, Bytes server_cid);

  std::vector<Bytes> on_datagram(ByteView datagram, std::int64_t now_us);
  std::vector<Bytes> on_timer(std::int64_t now_us);
  std::optional<std::int64_t> next_timer() const { return resend_at_; }

  bool validated() const { return validated_; }
  bool confirmed() const { return confirmed_; }
  std::uint64_t unvalidated_bytes_received() const { return received_unvalidated_; }
  std::uint64_t unvalidated_bytes_sent() const { return sent_unvalidated_; }
  std::uint64_t total_bytes_sent() const { return sent_total_; }

 private:
  enum class State { kIdle, kAwaitingToken, kFlight, kConfirmed };

  std::vector<Bytes> start_flight(std::int64_t now_us);
  std::vector<Bytes> emit(std::vector<Bytes> datagrams);
  std::vector<Bytes> build_flight(std::size_t cut);
  Bytes build_resend(std::size_t size);
  Bytes make_token() const;

  BehaviorSpec spec_;
  Bytes server_cid_;
  Bytes retry_cid_;
  Bytes client_scid_;
  std::uint32_t client_initial_pn_ = 0;
  wire::tls::StreamAssembler client_hs_;
  State state_ = State::kIdle;
  bool validated_ = false;
  bool confirmed_ = false;
  std::uint64_t received_unvalidated_ = 0;
  std::uint64_t sent_unvalidated_ = 0;
  std::uint64_t sent_total_ = 0;
  std::uint64_t first_flight_bytes_ = 0;
  std::vector<Bytes> pending_;  // held back until validation
  Bytes hs_stream_;
  std::uint32_t hs_pn_ = 0;
  std::uint32_t one_rtt_pn_ = 0;
  std::optional<std::int64_t> resend_at_;
  std::vector<std::size_t> resend_queue_;
  bool resend_planned_ = false;
  int resend_round_ = 0;
};

// Multiplexes connections of many clients. Connections are keyed by the
// peer address and the client's source connection ID.
class MockEndpoint {
 public:
  struct Send {
    std::string peer;
    Bytes payload;
  };

  explicit MockEndpoint(BehaviorSpec spec);

  std::vector<Send> on_datagram(const std::string& peer, ByteView datagram, std::int64_t now_us);
  std::vector<Send> on_timer(std::int64_t now_us);
  std::optional<std::int64_t> next_timer() const;

  const BehaviorSpec& spec() const { return spec_; }
  std::size_t connection_count() const { return connections_.size(); }
  std::uint64_t dropped_datagrams() const { return dropped_; }
  // Connection for a given peer/client CID pair, for inspection in tests.
  const MockConnection* find(const std::string& peer, ByteView client_scid) const;

 private:
  BehaviorSpec spec_;
  std::map<std::pair<std::string, Bytes>, std::unique_ptr<MockConnection>> connections_;
  std::uint64_t dropped_ = 0;
};

// Runs a MockEndpoint on a real UDP socket in a background thread.
class UdpMockServer {
 public:
  // bind_address "ip:port"; port 0 picks a free port. Throws IoError when
  // the socket cannot be bound.
  UdpMockServer(BehaviorSpec spec, const std::string& bind_address = "127.0.0.1:0");
  ~UdpMockServer();

  UdpMockServer(const UdpMockServer&) = delete;
  UdpMockServer& operator=(const UdpMockServer&) = delete;

  std::uint16_t port() const { return port_; }
  std::string address() const;
  void stop();

 private:
  void run();

  MockEndpoint endpoint_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::string host_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace quicaudit::mock
