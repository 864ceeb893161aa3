#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "quicaudit/backscatter/sessions.hpp"
#include "quicaudit/error.hpp"
#include "support/support.hpp"

namespace qa = quicaudit;
using qa::backscatter::BackscatterRecord;
using qa::backscatter::PrefixMap;

namespace {

BackscatterRecord rec(std::string src, std::int64_t t_s, std::uint32_t len, std::string scid_hex) {
  return {std::move(src), "203.0.113.9", t_s * 1'000'000, len, qa::from_hex(scid_hex), std::nullopt};
}

PrefixMap fixture_prefixes() { return PrefixMap::load_csv(qa::testing::data_path("backscatter/prefixes.csv")); }

}  // namespace

TEST(Backscatter, SameScidSumsIntoOneSession) {
  PrefixMap pm;
  pm.add("157.240.0.0/16", "Meta");
  auto s = qa::backscatter::sessionize(
      {rec("157.240.1.1", 0, 1200, "aa"), rec("157.240.1.2", 5, 1200, "aa"), rec("157.240.1.1", 9, 800, "aa")}, pm);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].total_bytes, 3200u);
  EXPECT_EQ(s[0].provider, "Meta");
  EXPECT_DOUBLE_EQ(s[0].duration_s(), 9.0);
}

TEST(Backscatter, InterleavedScidsGiveTwoSessions) {
  PrefixMap pm;
  auto s = qa::backscatter::sessionize({rec("10.0.0.1", 0, 100, "aa"), rec("10.0.0.1", 1, 200, "bb"),
                                        rec("10.0.0.1", 2, 300, "aa"), rec("10.0.0.1", 3, 400, "bb")},
                                       pm);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].total_bytes, 400u);
  EXPECT_EQ(s[1].total_bytes, 600u);
  EXPECT_EQ(s[0].provider, "OTHER");
}

TEST(Backscatter, GapStartsNewSession) {
  PrefixMap pm;
  std::vector<BackscatterRecord> r = {rec("10.0.0.1", 0, 100, "aa"), rec("10.0.0.1", 300, 100, "aa"),
                                      rec("10.0.0.1", 601, 100, "aa")};
  auto s = qa::backscatter::sessionize(r, pm);
  ASSERT_EQ(s.size(), 2u);  // a gap of exactly 300 s stays in one session
  EXPECT_EQ(s[0].total_bytes, 200u);
  EXPECT_EQ(s[1].records, 1u);
  EXPECT_EQ(qa::backscatter::sessionize(r, pm, 1000).size(), 1u);
  EXPECT_EQ(qa::backscatter::sessionize(r, pm, 10).size(), 3u);
}

TEST(Backscatter, LongestPrefixWinsAndLabelFallback) {
  PrefixMap pm;
  pm.add("10.0.0.0/8", "Wide");
  pm.add("10.1.0.0/16", "Narrow");
  pm.add("10.1.2.3/32", "Host");
  EXPECT_EQ(pm.lookup("10.9.9.9"), "Wide");
  EXPECT_EQ(pm.lookup("10.1.9.9"), "Narrow");
  EXPECT_EQ(pm.lookup("10.1.2.3"), "Host");
  EXPECT_EQ(pm.lookup("11.0.0.1"), std::nullopt);
  EXPECT_THROW(pm.add("10.0.0.0/33", "x"), qa::ConfigError);
  EXPECT_THROW(pm.add("fe80::/10", "x"), qa::ConfigError);

  auto r = rec("192.0.2.1", 0, 10, "01");
  r.provider_label = "Labelled";
  auto s = qa::backscatter::sessionize({r}, pm);
  EXPECT_EQ(s[0].provider, "Labelled");
}

TEST(Backscatter, FactorArithmetic) {
  qa::backscatter::Session s{"Meta", qa::from_hex("aa"), 13'620, 0, 0, 1};
  auto d = qa::backscatter::amplification_distribution({s}, 1362);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d[0].factor.max, 10.0);
  EXPECT_THROW(qa::backscatter::amplification_distribution({s}, 1199), qa::ConfigError);
}

TEST(Backscatter, QuantilesInterpolate) {
  auto b = qa::stats::box_summary({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(b.median, 2.5);
  EXPECT_DOUBLE_EQ(b.q1, 1.75);
  EXPECT_DOUBLE_EQ(b.q3, 3.25);
  EXPECT_DOUBLE_EQ(qa::stats::box_summary({7}).median, 7);
}

// 10k records over 20 providers' prefixes and 500 SCIDs, all inside one gap
// window, so sessions reduce to a plain group-by.
TEST(Backscatter, MatchesBruteForceGroupBy) {
  std::mt19937_64 rng(20240611);
  PrefixMap pm;
  for (int p = 0; p < 20; ++p) pm.add("10." + std::to_string(p) + ".0.0/16", "P" + std::to_string(p));
  std::vector<BackscatterRecord> records;
  for (int i = 0; i < 10'000; ++i) {
    const int p = static_cast<int>(rng() % 21);  // 20 is unmapped
    const auto scid = static_cast<std::uint16_t>(rng() % 500);
    std::string src = "10." + std::to_string(p) + "." + std::to_string(rng() % 256) + ".1";
    qa::Bytes id = {static_cast<std::uint8_t>(scid >> 8), static_cast<std::uint8_t>(scid)};
    records.push_back({src, "203.0.113.1", static_cast<std::int64_t>(rng() % 250'000'000),
                       static_cast<std::uint32_t>(40 + rng() % 1300), id, std::nullopt});
  }

  std::map<std::pair<std::string, qa::Bytes>, std::pair<std::uint64_t, std::size_t>> oracle;
  for (const auto& r : records) {
    const auto second = r.src_ip.find('.', 3);
    const int p = std::stoi(r.src_ip.substr(3, second - 3));
    auto& e = oracle[{p == 20 ? "OTHER" : "P" + std::to_string(p), r.scid}];
    e.first += r.udp_len;
    ++e.second;
  }

  auto sessions = qa::backscatter::sessionize(records, pm);
  ASSERT_EQ(sessions.size(), oracle.size());
  std::uint64_t total = 0, all = 0;
  std::size_t members = 0;
  for (const auto& s : sessions) {
    const auto& e = oracle.at({s.provider, s.scid});
    EXPECT_EQ(s.total_bytes, e.first);
    EXPECT_EQ(s.records, e.second);
    EXPECT_GE(s.duration_s(), 0.0);
    total += s.total_bytes;
    members += s.records;
  }
  for (const auto& r : records) all += r.udp_len;
  EXPECT_EQ(total, all);
  EXPECT_EQ(members, records.size());

  std::shuffle(records.begin(), records.end(), rng);
  EXPECT_EQ(qa::backscatter::sessionize(records, pm), sessions);
}

TEST(Backscatter, FixtureReproducesMetaNumbers) {
  auto records = qa::backscatter::load_records(qa::testing::data_path("backscatter/sessions.jsonl"));
  auto dist = qa::backscatter::amplification_distribution(
      qa::backscatter::sessionize(records, fixture_prefixes()), 1362);
  auto meta = std::find_if(dist.begin(), dist.end(), [](const auto& d) { return d.provider == "Meta"; });
  ASSERT_NE(meta, dist.end());
  EXPECT_EQ(meta->sessions, 7u);
  EXPECT_DOUBLE_EQ(meta->factor.max, 45.0);
  EXPECT_DOUBLE_EQ(meta->bytes.max, 61'290.0);
  EXPECT_DOUBLE_EQ(meta->duration_s.median, 51.0);
  EXPECT_DOUBLE_EQ(meta->duration_s.max, 206.0);
  EXPECT_TRUE(std::any_of(dist.begin(), dist.end(), [](const auto& d) { return d.provider == "OTHER"; }));
}

TEST(Backscatter, DistributionInvariantUnderPermutation) {
  auto records = qa::backscatter::load_records(qa::testing::data_path("backscatter/sessions.jsonl"));
  const auto pm = fixture_prefixes();
  auto base = qa::backscatter::amplification_distribution(qa::backscatter::sessionize(records, pm));
  std::mt19937 rng(7);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    auto d = qa::backscatter::amplification_distribution(qa::backscatter::sessionize(records, pm));
    ASSERT_EQ(d.size(), base.size());
    for (std::size_t k = 0; k < d.size(); ++k)
      EXPECT_EQ(qa::backscatter::summary_csv_row(d[k]), qa::backscatter::summary_csv_row(base[k]));
  }
}

TEST(Backscatter, CsvAndJsonlAgree) {
  auto records = qa::backscatter::load_records(qa::testing::data_path("backscatter/sessions.jsonl"));
  std::ostringstream csv;
  csv << "src_ip,dst_ip,time_us,udp_len,scid,provider\n";
  for (const auto& r : records)
    csv << r.src_ip << ',' << r.dst_ip << ',' << r.time_us << ',' << r.udp_len << ',' << qa::to_hex(r.scid) << ",\n";
  std::istringstream in(csv.str());
  EXPECT_EQ(qa::backscatter::read_records_csv(in), records);

  std::ostringstream jl;
  for (const auto& r : records) jl << qa::backscatter::to_json_line(r) << '\n';
  std::istringstream jin(jl.str());
  EXPECT_EQ(qa::backscatter::read_records_jsonl(jin), records);

  std::istringstream bad("{\"src_ip\":1}\n");
  EXPECT_THROW(qa::backscatter::read_records_jsonl(bad), qa::ParseError);
}
