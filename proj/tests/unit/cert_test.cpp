#include <gtest/gtest.h>

#include <sstream>

#include "json.hpp"
#include "quicaudit/cert/analysis.hpp"
#include "quicaudit/cert/chain.hpp"
#include "quicaudit/error.hpp"
#include "support/support.hpp"

namespace qa = quicaudit;
using namespace qa::cert;
using qa::testing::data_path;

namespace {

ChainRecord load(const std::string& rel) { return load_chain_file(data_path(rel)); }

}  // namespace

TEST(DerAnatomy, MatchesAsn1parseForEveryFixture) {
  std::size_t checked = 0;
  for (const auto& file : qa::testing::fixture_cert_files()) {
    SCOPED_TRACE(file);
    const auto chain = load_chain_file(file);
    std::istringstream oracle(
        qa::testing::run_command("python3 " + qa::testing::oracle_path("der_oracle.py") + " " + file));
    std::string line;
    std::size_t i = 0;
    while (std::getline(oracle, line)) {
      ASSERT_LT(i, chain.certs.size());
      const auto j = nlohmann::json::parse(line);
      const auto& c = chain.certs[i++];
      EXPECT_EQ(c.der_len, j["der_len"].get<std::uint64_t>());
      for (auto f : kAllFields)
        EXPECT_EQ(c.field(f), j["fields"][std::string(to_string(f))].get<std::uint64_t>()) << to_string(f);
      EXPECT_EQ(c.structural_overhead, j["overhead"].get<std::uint64_t>());
      EXPECT_EQ(c.san_bytes, j["san_bytes"].get<std::uint64_t>());
      EXPECT_EQ(c.field_sum() + c.structural_overhead, c.der_len);
      ++checked;
    }
    EXPECT_EQ(i, chain.certs.size());
  }
  EXPECT_GT(checked, 40u);
}

TEST(DerAnatomy, DerRoundTripIsBitExact) {
  for (const char* f : {"certs/chain3.der", "certs/chain2.der"}) {
    const auto blob = qa::read_file(data_path(f));
    EXPECT_EQ(to_der(parse_chain(blob)), blob);
  }
}

TEST(DerAnatomy, PemRoundTripIsBitExact) {
  for (const auto& file : qa::testing::fixture_cert_files()) {
    if (file.size() < 4 || file.substr(file.size() - 4) != ".pem") continue;
    const auto blob = qa::read_file(file);
    EXPECT_EQ(to_pem(parse_chain(blob)), std::string(blob.begin(), blob.end())) << file;
  }
}

TEST(DerAnatomy, PemAndDerAgree) {
  EXPECT_EQ(to_der(load("certs/chain3.pem")), qa::read_file(data_path("certs/chain3.der")));
}

TEST(DerAnatomy, MalformedInputReportsOffset) {
  auto blob = qa::read_file(data_path("certs/chain2.der"));
  const auto first = parse_chain(blob).certs[0].der_len;
  blob.resize(first + 10);
  try {
    parse_chain(blob);
    FAIL() << "expected ParseError";
  } catch (const qa::ParseError& e) {
    EXPECT_EQ(e.offset(), first);
  }
  EXPECT_THROW(parse_chain(qa::Bytes{}), qa::ParseError);
  EXPECT_THROW(parse_chain(qa::as_bytes("-----BEGIN NOTHING-----\n")), qa::ParseError);
}

TEST(Chain, MinimalSelfSignedIsRoot) {
  const auto c = load("certs/min-ecdsa256-selfsigned.pem");
  ASSERT_EQ(c.certs.size(), 1u);
  EXPECT_EQ(c.leaf().role, Role::kRoot);
  EXPECT_TRUE(c.leaf().self_signed);
  EXPECT_EQ(c.leaf().key_algo, KeyAlgo::kEcdsa256);
  EXPECT_EQ(c.leaf().field(Field::kExtensions), 0u);
}

TEST(Chain, ThreeCertChainIsAdditiveAndOrdered) {
  const auto c = load("certs/chain3.pem");
  ASSERT_EQ(c.certs.size(), 3u);
  EXPECT_EQ(c.total_len, c.certs[0].der_len + c.certs[1].der_len + c.certs[2].der_len);
  EXPECT_TRUE(c.ordered_correctly);
  EXPECT_EQ(c.certs[0].role, Role::kLeaf);
  EXPECT_EQ(c.certs[1].role, Role::kIntermediate);
  EXPECT_EQ(c.certs[2].role, Role::kRoot);
  EXPECT_EQ(c.certs[1].key_algo, KeyAlgo::kRsa2048);
  EXPECT_EQ(c.certs[2].key_algo, KeyAlgo::kRsa4096);
  EXPECT_EQ(c.leaf().san_count, 2u);
}

TEST(Chain, EveryNonIdentityPermutationBreaksOrdering) {
  const auto c = load("certs/chain4-ordered.pem");
  ASSERT_TRUE(c.ordered_correctly);
  std::vector<qa::Bytes> ders;
  for (const auto& cert : c.certs) ders.push_back(cert.der);
  std::vector<std::size_t> idx = {0, 1, 2, 3};
  int perms = 0;
  while (std::next_permutation(idx.begin(), idx.end())) {
    std::vector<qa::Bytes> p;
    for (auto i : idx) p.push_back(ders[i]);
    EXPECT_FALSE(chain_from_certs(p).ordered_correctly);
    ++perms;
  }
  EXPECT_EQ(perms, 23);
}

TEST(Findings, EmbeddedRootIsFlaggedAndUnordered) {
  const auto c = load("certs/chain4-embedded-root.pem");
  EXPECT_FALSE(c.ordered_correctly);
  const auto f = detect_included_anchor(c);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].index, 2u);
  EXPECT_EQ(f[0].savings, c.certs[2].der_len);
}

TEST(Findings, AnchorAtEndAndLeafOnly) {
  const auto c = load("certs/chain3.pem");
  const auto f = detect_included_anchor(c);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].savings, c.certs.back().der_len);
  EXPECT_TRUE(detect_included_anchor(load("certs/chain2.pem")).empty());
  auto leaf_only = chain_from_certs({load("certs/chain2.pem").certs[0].der});
  EXPECT_TRUE(detect_included_anchor(leaf_only).empty());
}

TEST(Findings, IsrgCrossSignIsFlagged) {
  const auto store = TrustStore::load_dir(data_path("truststore"));
  EXPECT_EQ(store.size(), 3u);
  const auto c = load("certs/chain-isrg-cross.pem");
  const auto f = detect_cross_signed(c, store);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].index, 2u);
  EXPECT_NE(f[0].subject.find("ISRG Root X1"), std::string::npos);
  EXPECT_NE(f[0].issuer.find("DST Root CA X3"), std::string::npos);
}

TEST(Findings, SyntheticCrossSignIsFlagged) {
  const auto store = TrustStore::load_dir(data_path("truststore"));
  const auto f = detect_cross_signed(load("certs/chain-synthetic-cross.pem"), store);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].index, 2u);
}

TEST(Findings, NoStoreOverlapNoFindings) {
  const auto store = TrustStore::load_dir(data_path("truststore"));
  EXPECT_TRUE(detect_cross_signed(load("certs/chain3.pem"), store).empty());
  const auto only_a = TrustStore::from_certs({load("truststore/fixture-root-a.pem").leaf()});
  EXPECT_TRUE(detect_cross_signed(load("certs/chain-isrg-cross.pem"), only_a).empty());
  EXPECT_THROW(TrustStore::from_certs({load("certs/chain2.pem").leaf()}), qa::ConfigError);
}

TEST(LimitFit, MedianChainSizesAtTheBoundary) {
  auto c = load("certs/chain2.pem");
  c.total_len = 4022;
  EXPECT_TRUE(limit_fit(c, 1357).fits);
  EXPECT_EQ(limit_fit(c, 1357).budget, 4071u);
  EXPECT_FALSE(limit_fit(c, 1340).fits);
  c.total_len = 2329;
  EXPECT_TRUE(limit_fit(c, 1200).fits);
  c.total_len = 3601;
  EXPECT_FALSE(limit_fit(c, 1200).fits);
  c.total_len = 3600;
  EXPECT_TRUE(limit_fit(c, 1200).fits);
  EXPECT_FALSE(limit_fit(c, 1200, 1).fits);
  EXPECT_THROW(limit_fit(c, 1199), qa::ConfigError);
  EXPECT_THROW(limit_fit(c, 65528), qa::ConfigError);
}

TEST(LimitFit, MonotoneInSizeAntitoneInChain) {
  auto c = load("certs/chain2.pem");
  for (std::uint64_t len = 3000; len < 5000; len += 37) {
    c.total_len = len;
    bool prev = false;
    for (std::uint32_t s = 1200; s <= 1472; ++s) {
      const bool fits = limit_fit(c, s).fits;
      EXPECT_TRUE(!prev || fits);
      prev = fits;
    }
  }
}

TEST(CruiseLiner, TwoHundredSansMatchesOracle) {
  const auto file = data_path("certs/cruise200.pem");
  const auto c = load_chain_file(file);
  const auto j = nlohmann::json::parse(qa::testing::run_command(
      "python3 " + qa::testing::oracle_path("der_oracle.py") + " " + file + " | head -1"));
  const double expected = j["san_bytes"].get<double>() / j["der_len"].get<double>();
  const auto s = cruise_liner_score(c);
  EXPECT_DOUBLE_EQ(s.san_share, expected);
  EXPECT_EQ(c.leaf().san_count, 200u);
  EXPECT_TRUE(s.flagged);
}

TEST(CruiseLiner, ThresholdAndSmallCases) {
  auto c = load("certs/chain2.pem");
  c.certs[0].der_len = 1000;
  c.certs[0].san_bytes = 20;
  EXPECT_DOUBLE_EQ(cruise_liner_score(c).san_share, 0.02);
  EXPECT_FALSE(cruise_liner_score(c).flagged);
  c.certs[0].san_bytes = 289;
  EXPECT_TRUE(cruise_liner_score(c).flagged);
  c.certs[0].san_bytes = 288;
  EXPECT_FALSE(cruise_liner_score(c).flagged);
}

TEST(Anatomy, SingleCertEqualsItsFields) {
  const auto c = load("certs/min-ecdsa256-selfsigned.pem");
  const auto a = field_anatomy({c});
  for (auto f : kAllFields) {
    EXPECT_DOUBLE_EQ(a.stats(RoleGroup::kLeaf, f).mean, static_cast<double>(c.leaf().field(f)));
    EXPECT_DOUBLE_EQ(a.stats(RoleGroup::kLeaf, f).median, static_cast<double>(c.leaf().field(f)));
  }
  EXPECT_EQ(a.cert_count(RoleGroup::kNonLeaf), 0u);
}

TEST(Anatomy, ConstructedCorpusMeansAndMerge) {
  std::vector<ChainRecord> chains;
  for (const auto& f : qa::testing::corpus_chain_files()) chains.push_back(load_chain_file(f));
  double sum = 0;
  for (const auto& c : chains) sum += static_cast<double>(c.leaf().field(Field::kExtensions));
  const auto all = field_anatomy(chains);
  EXPECT_DOUBLE_EQ(all.stats(RoleGroup::kLeaf, Field::kExtensions).mean, sum / static_cast<double>(chains.size()));
  FieldAnatomy a = field_anatomy({chains.begin(), chains.begin() + 7});
  a.merge(field_anatomy({chains.begin() + 7, chains.end()}));
  for (auto g : {RoleGroup::kLeaf, RoleGroup::kNonLeaf})
    for (auto f : kAllFields) {
      EXPECT_DOUBLE_EQ(a.stats(g, f).mean, all.stats(g, f).mean);
      EXPECT_DOUBLE_EQ(a.stats(g, f).median, all.stats(g, f).median);
    }
  // Leaves with many SANs: extensions are the largest field class.
  EXPECT_EQ(all.ranking(RoleGroup::kLeaf).front(), Field::kExtensions);
}

TEST(ParentGroups, SharedParentIsOneGroup) {
  std::vector<ChainRecord> chains;
  for (const auto& f : qa::testing::corpus_chain_files()) {
    auto c = load_chain_file(f);
    if (c.certs.size() == 2) chains.push_back(c);
  }
  const auto g = parent_chain_group(chains);
  ASSERT_EQ(g.groups.size(), 1u);
  EXPECT_DOUBLE_EQ(g.groups[0].coverage, 1.0);
  EXPECT_EQ(g.groups[0].service_count, chains.size());
}

TEST(ParentGroups, ThreeGroupCorpusCounts) {
  std::vector<ChainRecord> chains;
  for (const auto& f : qa::testing::corpus_chain_files()) chains.push_back(load_chain_file(f));
  chains.push_back(load("certs/chain-synthetic-cross.pem"));
  chains.push_back(load("certs/chain4-embedded-root.pem"));  // unordered, excluded
  const auto g = parent_chain_group(chains);
  ASSERT_EQ(g.groups.size(), 3u);
  EXPECT_EQ(g.excluded_unordered, 1u);
  EXPECT_EQ(g.considered, 21u);
  EXPECT_EQ(g.groups[0].service_count, 15u);  // corpus entries with 2 certs
  EXPECT_EQ(g.groups[1].service_count, 5u);   // every fourth with the root
  EXPECT_EQ(g.groups[2].service_count, 1u);
  EXPECT_DOUBLE_EQ(g.top_coverage(10), 1.0);
}

TEST(KeyAlgos, AllEcdsaCorpusIsOneCell) {
  const auto c = load("certs/min-ecdsa256-selfsigned.pem");
  const auto t = key_algo_stats({c, c, c});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(t.share.at("FILE Leaf").at(KeyAlgo::kEcdsa256), 1.0);
  EXPECT_EQ(t.columns, std::vector<KeyAlgo>{KeyAlgo::kEcdsa256});
}

TEST(KeyAlgos, MixedCorpusMatchesConstruction) {
  std::vector<ChainRecord> chains;
  for (const auto& f : qa::testing::corpus_chain_files()) chains.push_back(load_chain_file(f));
  const auto t = key_algo_stats(chains);
  // Leaves: RSA-2048 for every third index (0,3,..,18 -> 7), ECDSA-256 otherwise.
  EXPECT_EQ(t.counts.at("FILE Leaf").at(KeyAlgo::kRsa2048), 7u);
  EXPECT_EQ(t.counts.at("FILE Leaf").at(KeyAlgo::kEcdsa256), 13u);
  // Non-leaves: 20 intermediates (RSA-2048) and 5 roots (RSA-4096).
  EXPECT_EQ(t.counts.at("FILE Non-leaf").at(KeyAlgo::kRsa2048), 20u);
  EXPECT_EQ(t.counts.at("FILE Non-leaf").at(KeyAlgo::kRsa4096), 5u);
  EXPECT_DOUBLE_EQ(t.share.at("FILE Non-leaf").at(KeyAlgo::kRsa4096), 0.2);
}

TEST(KeyAlgos, RareAlgorithmsAreDropped) {
  std::vector<ChainRecord> chains(120, load("certs/min-ecdsa256-selfsigned.pem"));
  chains.push_back(load("truststore/fixture-root-a.pem"));  // one ECDSA-384 among 121
  const auto t = key_algo_stats(chains);
  EXPECT_EQ(t.columns, std::vector<KeyAlgo>{KeyAlgo::kEcdsa256});
  EXPECT_EQ(t.counts.at("FILE Leaf").at(KeyAlgo::kEcdsa384), 1u);
}
