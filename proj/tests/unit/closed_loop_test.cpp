#include <gtest/gtest.h>

#include "quicaudit/handshake/analysis.hpp"
#include "quicaudit/mock/behavior.hpp"
#include "quicaudit/probe/transport.hpp"

namespace qa = quicaudit;
using qa::handshake::HandshakeClass;

namespace {

qa::probe::ProbeConfig config(std::uint32_t size, qa::probe::ProbeMode mode = qa::probe::ProbeMode::kComplete) {
  qa::probe::ProbeConfig cfg;
  cfg.target = {"mock.test", "127.0.0.1", 4433};
  cfg.initial_size = size;
  cfg.mode = mode;
  return cfg;
}

}  // namespace

TEST(ClosedLoop, CompliantIsOneRtt) {
  qa::probe::SimulatedTransport t(qa::mock::preset("compliant"));
  auto trace = qa::probe::probe_once(config(1200), t);
  EXPECT_EQ(trace.outcome, qa::handshake::Outcome::kCompleted);
  auto r = qa::handshake::classify_handshake(trace);
  EXPECT_EQ(r.klass, HandshakeClass::kOneRtt);
  EXPECT_EQ(r.client_flights, 1u);
}

TEST(ClosedLoop, StallAtExactlyThreeTimes) {
  auto spec = qa::mock::preset("stall");
  qa::probe::SimulatedTransport t(spec);
  auto trace = qa::probe::probe_once(config(1200), t);
  auto r = qa::handshake::classify_handshake(trace);
  EXPECT_EQ(r.klass, HandshakeClass::kMultiRtt);
  EXPECT_EQ(r.pre_validation_server_bytes, 3600u);
  EXPECT_DOUBLE_EQ(r.amplification_factor, 3.0);
  EXPECT_FALSE(r.limit_exceeded);
}

TEST(ClosedLoop, MetaNoAck) {
  qa::probe::SimulatedTransport t(qa::mock::preset("meta"));
  auto trace = qa::probe::probe_once(config(1252, qa::probe::ProbeMode::kNoAck), t);
  EXPECT_EQ(qa::handshake::pre_validation_bytes(trace).server, 35056u);
  EXPECT_NEAR(qa::handshake::amplification_factor(trace), 28.0, 0.1);
}
