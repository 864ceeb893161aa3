#include <gtest/gtest.h>

#include <chrono>

#include "quicaudit/error.hpp"
#include "quicaudit/handshake/analysis.hpp"
#include "quicaudit/mock/behavior.hpp"
#include "quicaudit/probe/dns.hpp"
#include "quicaudit/probe/sweep.hpp"
#include "quicaudit/probe/transport.hpp"

namespace qa = quicaudit;
using qa::handshake::HandshakeClass;
using qa::probe::DnsStatus;
using qa::probe::StubResolver;

namespace {

qa::probe::ProbeConfig base_config(std::uint32_t size = 1362) {
  qa::probe::ProbeConfig cfg;
  cfg.target = {"sim.test", "127.0.0.1", 443};
  cfg.initial_size = size;
  return cfg;
}

class LimitedTransport : public qa::probe::QuicTransport {
 public:
  LimitedTransport(qa::probe::TransportCapabilities caps, qa::mock::BehaviorSpec spec) : caps_(caps), inner_(spec) {}
  qa::probe::TransportCapabilities capabilities() const override { return caps_; }
  qa::handshake::HandshakeTrace handshake(const qa::probe::ProbeConfig& cfg) override { return inner_.handshake(cfg); }

 private:
  qa::probe::TransportCapabilities caps_;
  qa::probe::SimulatedTransport inner_;
};

class ThrowingTransport : public qa::probe::QuicTransport {
 public:
  qa::probe::TransportCapabilities capabilities() const override { return qa::probe::TransportCapabilities::all(); }
  qa::handshake::HandshakeTrace handshake(const qa::probe::ProbeConfig& cfg) override {
    if (cfg.initial_size % 20 == 0) throw qa::IoError("socket failure");
    return inner_.handshake(cfg);
  }

 private:
  qa::probe::SimulatedTransport inner_{qa::mock::preset("compliant")};
};

}  // namespace

TEST(ProbeConfig, Validation) {
  auto cfg = base_config();
  EXPECT_NO_THROW(qa::probe::validate(cfg));
  cfg.initial_size = 1199;
  EXPECT_THROW(qa::probe::validate(cfg), qa::ConfigError);
  cfg.initial_size = 1473;
  EXPECT_THROW(qa::probe::validate(cfg), qa::ConfigError);
  cfg.initial_size = 1472;
  EXPECT_NO_THROW(qa::probe::validate(cfg));
  cfg.mtu = 9000;
  cfg.initial_size = 8972;
  EXPECT_NO_THROW(qa::probe::validate(cfg));
  cfg = base_config();
  cfg.timeout_s = 0;
  EXPECT_THROW(qa::probe::validate(cfg), qa::ConfigError);
  EXPECT_EQ(qa::probe::parse_probe_mode("no-ack"), qa::probe::ProbeMode::kNoAck);
  EXPECT_THROW(qa::probe::parse_probe_mode("half"), qa::ConfigError);
}

TEST(ProbeConfig, Durations) {
  EXPECT_DOUBLE_EQ(qa::probe::parse_duration_s("30m"), 1800);
  EXPECT_DOUBLE_EQ(qa::probe::parse_duration_s("250ms"), 0.25);
  EXPECT_DOUBLE_EQ(qa::probe::parse_duration_s("1h"), 3600);
  EXPECT_DOUBLE_EQ(qa::probe::parse_duration_s("0"), 0);
  EXPECT_DOUBLE_EQ(qa::probe::parse_duration_s("45"), 45);
  EXPECT_THROW(qa::probe::parse_duration_s("soon"), qa::ConfigError);
}

TEST(ProbeOnce, InitialIsPaddedExactlyForEverySize) {
  qa::probe::SimulatedTransport t(qa::mock::preset("compliant"));
  for (std::uint32_t size = 1200; size <= 1472; ++size) {
    auto trace = qa::probe::probe_once(base_config(size), t);
    ASSERT_EQ(trace.datagrams.front().udp_payload_len, size);
    ASSERT_EQ(trace.client_initial_size, size);
  }
}

TEST(ProbeOnce, NoAckSendsExactlyOneDatagram) {
  for (const char* name : {"meta", "meta-5x", "compliant", "cloudflare", "stall"}) {
    qa::probe::SimulatedTransport t(qa::mock::preset(name));
    auto cfg = base_config(1252);
    cfg.mode = qa::probe::ProbeMode::kNoAck;
    auto trace = qa::probe::probe_once(cfg, t);
    EXPECT_EQ(std::count_if(trace.datagrams.begin(), trace.datagrams.end(),
                            [](const auto& d) { return d.from_client(); }),
              1)
        << name;
  }
}

TEST(ProbeOnce, NoAckAmplificationFactors) {
  qa::probe::SimulatedTransport meta(qa::mock::preset("meta"));
  auto cfg = base_config(1252);
  cfg.mode = qa::probe::ProbeMode::kNoAck;
  EXPECT_NEAR(qa::handshake::amplification_factor(qa::probe::probe_once(cfg, meta)), 28.0, 0.01);
  qa::probe::SimulatedTransport five(qa::mock::preset("meta-5x"));
  EXPECT_NEAR(qa::handshake::amplification_factor(qa::probe::probe_once(cfg, five)), 5.6, 0.01);
}

TEST(ProbeOnce, EncapsulatedLargeInitialIsUnreachable) {
  auto spec = qa::mock::preset("compliant");
  spec.encapsulation_overhead = 80;
  qa::probe::SimulatedTransport t(spec);
  EXPECT_EQ(qa::probe::probe_once(base_config(1472), t).outcome, qa::handshake::Outcome::kUnreachable);
  EXPECT_EQ(qa::probe::probe_once(base_config(1392), t).outcome, qa::handshake::Outcome::kCompleted);
  EXPECT_EQ(qa::probe::probe_once(base_config(1393), t).outcome, qa::handshake::Outcome::kUnreachable);
}

TEST(ProbeOnce, CapabilityContract) {
  auto caps = qa::probe::TransportCapabilities::all();
  caps.ack_suppression = false;
  LimitedTransport no_suppress(caps, qa::mock::preset("meta"));
  auto cfg = base_config();
  cfg.mode = qa::probe::ProbeMode::kNoAck;
  EXPECT_THROW(qa::probe::probe_once(cfg, no_suppress), qa::CapabilityMissingError);
  EXPECT_NO_THROW(qa::probe::probe_once(base_config(), no_suppress));

  caps = qa::probe::TransportCapabilities::all();
  caps.exact_initial_padding = false;
  LimitedTransport no_pad(caps, qa::mock::preset("compliant"));
  EXPECT_THROW(qa::probe::probe_once(base_config(), no_pad), qa::CapabilityMissingError);

  caps = qa::probe::TransportCapabilities::all();
  caps.frame_visibility = false;
  LimitedTransport no_frames(caps, qa::mock::preset("cloudflare"));
  auto trace = qa::probe::probe_once(base_config(), no_frames);
  EXPECT_FALSE(trace.frames_visible);
  EXPECT_THROW(qa::handshake::payload_decomposition(trace), qa::CapabilityMissingError);
  EXPECT_EQ(qa::handshake::classify_handshake(trace).klass, HandshakeClass::kAmplification);
}

TEST(Behavior, JsonRoundTripAndValidation) {
  for (const auto& name : qa::mock::preset_names()) {
    auto spec = qa::mock::preset(name);
    EXPECT_EQ(qa::mock::behavior_from_json(qa::mock::behavior_to_json(spec)), spec) << name;
  }
  EXPECT_THROW(qa::mock::preset("nope"), qa::ConfigError);
  EXPECT_THROW(qa::mock::behavior_from_json(R"({"resend_policy":{"kind":"uncapped"}})"), qa::ConfigError);
  EXPECT_THROW(qa::mock::behavior_from_json(R"({"stall_at_limit":false,"resend_policy":{"kind":"capped_3x"}})"),
               qa::ConfigError);
  auto s = qa::mock::behavior_from_json(R"({"preset":"stall","chain_len":5000})");
  EXPECT_EQ(s.chain_len, 5000u);
  EXPECT_TRUE(s.stall_at_limit);
}

TEST(Dns, StubOutcomes) {
  StubResolver stub({{"a.test", StubResolver::a({"192.0.2.1", "192.0.2.2"})},
                     {"fail.test", StubResolver::rcode(2)},
                     {"refused.test", StubResolver::rcode(5)},
                     {"empty.test", StubResolver::a({})}});
  auto a = qa::probe::resolve_domain("A.Test", stub.address(), 2);
  EXPECT_EQ(a.status, DnsStatus::kARecord);
  EXPECT_EQ(a.addresses, (std::vector<std::string>{"192.0.2.1", "192.0.2.2"}));
  EXPECT_EQ(qa::probe::resolve_domain("fail.test", stub.address(), 2).status, DnsStatus::kServfail);
  EXPECT_EQ(qa::probe::resolve_domain("refused.test", stub.address(), 2).status, DnsStatus::kRefused);
  EXPECT_EQ(qa::probe::resolve_domain("missing.test", stub.address(), 2).status, DnsStatus::kNxdomain);
  EXPECT_EQ(qa::probe::resolve_domain("empty.test", stub.address(), 2).status, DnsStatus::kNxdomain);
}

TEST(Dns, SlowAnswerTimesOutAtTenSeconds) {
  StubResolver stub({{"slow.test", {0, {"192.0.2.7"}, std::chrono::milliseconds(11'000)}}});
  const auto t0 = std::chrono::steady_clock::now();
  auto r = qa::probe::resolve_domain("slow.test", stub.address());
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(r.status, DnsStatus::kTimeout);
  EXPECT_GE(elapsed, 9.9);
  EXPECT_LT(elapsed, 10.9);
}

TEST(Dns, UnreachableResolverIsTimeout) {
  std::string closed;
  {
    StubResolver gone({});
    closed = gone.address();
  }
  EXPECT_EQ(qa::probe::resolve_domain("x.test", closed, 0.5).status, DnsStatus::kTimeout);
  EXPECT_THROW(qa::probe::resolve_domain("x.test", "not-an-ip"), qa::ConfigError);
}

TEST(Dns, WireFormatRoundTrip) {
  auto q = qa::probe::dns::build_query(0x1234, "Www.Example.Test");
  auto parsed = qa::probe::dns::parse_query(q);
  EXPECT_EQ(parsed.id, 0x1234);
  EXPECT_EQ(parsed.name, "www.example.test");
  EXPECT_EQ(parsed.qtype, 1);
  auto resp = qa::probe::dns::parse_response(qa::probe::dns::build_response(parsed, 0, {"198.51.100.1"}));
  EXPECT_EQ(resp.id, 0x1234);
  EXPECT_EQ(resp.a_records, std::vector<std::string>{"198.51.100.1"});
  EXPECT_THROW(qa::probe::dns::parse_query(qa::Bytes{1, 2, 3}), qa::ParseError);
}

TEST(Sweep, CompliantGivesTwentyEightOneRtt) {
  qa::probe::SimulatedTransport t(qa::mock::preset("compliant"));
  qa::ManualClock clock;
  qa::probe::SweepConfig sc;
  auto records = qa::probe::sweep(base_config(), sc, t, clock);
  ASSERT_EQ(records.size(), 28u);
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].initial_size, 1200u + 10u * i);
    ASSERT_TRUE(records[i].quic.has_value());
    EXPECT_EQ(records[i].quic->klass, HandshakeClass::kOneRtt);
    if (i > 0) EXPECT_GE(records[i].started_us - records[i - 1].started_us, 1'800'000'000);
  }
}

TEST(Sweep, StallFiveThousandIsMultiRttEverywhere) {
  auto spec = qa::mock::preset("stall");
  spec.chain_len = 5000;
  qa::probe::SimulatedTransport t(spec);
  qa::ManualClock clock;
  qa::probe::SweepConfig sc;
  sc.spacing_s = 0;
  for (const auto& r : qa::probe::sweep(base_config(), sc, t, clock)) {
    ASSERT_TRUE(r.quic.has_value());
    EXPECT_EQ(r.quic->klass, HandshakeClass::kMultiRtt) << r.initial_size;
  }
}

TEST(Sweep, StallThirtyNineHundredFlipsAtThirteenHundred) {
  qa::probe::SimulatedTransport t(qa::mock::preset("stall"));  // 3900 B flight
  qa::ManualClock clock;
  qa::probe::SweepConfig sc;
  sc.spacing_s = 0;
  for (const auto& r : qa::probe::sweep(base_config(), sc, t, clock)) {
    ASSERT_TRUE(r.quic.has_value());
    EXPECT_EQ(r.quic->klass, r.initial_size < 1300 ? HandshakeClass::kMultiRtt : HandshakeClass::kOneRtt)
        << r.initial_size;
  }
}

TEST(Sweep, FailuresAreRecordedAndSweepContinues) {
  ThrowingTransport t;
  qa::ManualClock clock;
  qa::probe::SweepConfig sc;
  sc.spacing_s = 0;
  auto records = qa::probe::sweep(base_config(), sc, t, clock);
  ASSERT_EQ(records.size(), 28u);
  std::size_t failed = 0;
  for (const auto& r : records) {
    if (r.initial_size % 20 == 0) {
      ++failed;
      EXPECT_TRUE(r.error.has_value());
      EXPECT_FALSE(r.quic.has_value());
    } else {
      EXPECT_TRUE(r.quic.has_value());
    }
  }
  EXPECT_EQ(failed, 14u);
}
