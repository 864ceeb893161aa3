#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "quicaudit/cert/chain.hpp"
#include "quicaudit/compress/lab.hpp"
#include "quicaudit/error.hpp"
#include "support/support.hpp"

namespace qa = quicaudit;
using namespace qa::compress;
using qa::cert::ChainRecord;

namespace {

std::vector<ChainRecord> corpus() {
  std::vector<ChainRecord> out;
  for (const auto& f : qa::testing::corpus_chain_files()) out.push_back(qa::cert::load_chain_file(f));
  return out;
}

// 200 chains whose uncompressed sizes straddle the budgets: corpus chains
// padded with extra copies of their own certificates.
std::vector<ChainRecord> straddling_corpus() {
  const auto base = corpus();
  std::vector<ChainRecord> out;
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto& src = base[static_cast<std::size_t>(i) % base.size()];
    std::vector<qa::Bytes> ders;
    for (const auto& c : src.certs) ders.push_back(c.der);
    const int extra = static_cast<int>(rng() % 3);
    for (int k = 0; k < extra; ++k) ders.push_back(src.certs[rng() % src.certs.size()].der);
    out.push_back(qa::cert::chain_from_certs(ders, "synthetic" + std::to_string(i)));
  }
  return out;
}

}  // namespace

TEST(Compression, MatchesReferenceCompressorsOnFixtureChains) {
  const auto files = qa::testing::corpus_chain_files();
  ASSERT_EQ(files.size(), 20u);
  std::string cmd = "python3 " + qa::testing::oracle_path("compress_oracle.py");
  for (const auto& f : files) cmd += " " + f;
  std::istringstream out(qa::testing::run_command(cmd));
  std::string path;
  std::uint64_t z, b, s, orig;
  std::size_t rows = 0;
  while (out >> path >> z >> b >> s >> orig) {
    SCOPED_TRACE(path);
    const auto chain = qa::cert::load_chain_file(path);
    EXPECT_EQ(chain.total_len, orig);
    EXPECT_EQ(compress_chain(chain, Algorithm::kZlib).compressed_len, z);
    EXPECT_EQ(compress_chain(chain, Algorithm::kBrotli).compressed_len, b);
    EXPECT_EQ(compress_chain(chain, Algorithm::kZstd).compressed_len, s);
    ++rows;
  }
  EXPECT_EQ(rows, 20u);
}

TEST(Compression, RoundTripsBitExact) {
  for (const auto& chain : corpus()) {
    const auto der = qa::cert::to_der(chain);
    for (auto a : kAllAlgorithms) {
      const auto o = compress_chain(chain, a);
      EXPECT_EQ(decompress(a, o.payload, o.original_len), der);
    }
  }
}

TEST(Compression, MinimalChainShrinksAndIsDeterministic) {
  const auto c = qa::cert::load_chain_file(qa::testing::data_path("certs/min-ecdsa256-selfsigned.pem"));
  for (auto a : kAllAlgorithms) {
    const auto o = compress_chain(c, a);
    EXPECT_LT(o.compressed_len, o.original_len) << to_string(a);
    EXPECT_EQ(compress_chain(c, a).payload, o.payload);
    EXPECT_DOUBLE_EQ(o.ratio + o.remaining_share, 1.0);
  }
}

TEST(Compression, IncompressibleInputRecordsExpansion) {
  std::mt19937 rng(1);
  qa::Bytes noise(4000);
  for (auto& b : noise) b = static_cast<std::uint8_t>(rng());
  for (auto a : kAllAlgorithms) {
    const auto c = compress(a, noise);
    EXPECT_GT(c.size(), noise.size());
    EXPECT_EQ(decompress(a, c, noise.size()), noise);
  }
}

TEST(Compression, CorruptPayloadIsRejected) {
  const auto c = compress(Algorithm::kZstd, qa::as_bytes("hello hello hello hello"));
  qa::Bytes bad(c.begin(), c.end() - 2);
  EXPECT_THROW(decompress(Algorithm::kZstd, bad, 23), qa::Error);
  EXPECT_THROW(parse_algorithm("lzma"), qa::ConfigError);
}

TEST(CompressionReport, FractionsEqualBruteForceCount) {
  const auto chains = straddling_corpus();
  const std::vector<std::uint32_t> budgets = {1200, 1357, 1472};
  std::map<Algorithm, std::vector<std::size_t>> lens;
  for (auto a : kAllAlgorithms)
    for (const auto& c : chains) lens[a].push_back(compress(a, qa::cert::to_der(c)).size());
  for (std::uint64_t overhead : {0ull, 1100ull}) {
    const auto r = compression_report(chains, budgets, overhead);
    for (auto a : kAllAlgorithms) {
      for (auto b : budgets) {
        std::size_t count = 0, plain = 0;
        for (std::size_t i = 0; i < chains.size(); ++i) {
          const auto& c = chains[i];
          count += lens[a][i] + overhead <= 3ull * b;
          plain += c.total_len + overhead <= 3ull * b;
        }
        EXPECT_EQ(r.algorithms.at(a).fit_count.at(b), count);
        EXPECT_DOUBLE_EQ(r.algorithms.at(a).fit_fraction.at(b), static_cast<double>(count) / 200.0);
        EXPECT_DOUBLE_EQ(r.algorithms.at(a).uncompressed_fit_fraction.at(b), static_cast<double>(plain) / 200.0);
      }
    }
  }
}

TEST(CompressionReport, InvariantUnderPermutation) {
  auto chains = straddling_corpus();
  chains.resize(50);
  const auto before = compression_report(chains);
  std::mt19937 rng(3);
  std::shuffle(chains.begin(), chains.end(), rng);
  const auto after = compression_report(chains);
  for (auto a : kAllAlgorithms) {
    EXPECT_EQ(before.algorithms.at(a).fit_count, after.algorithms.at(a).fit_count);
    EXPECT_DOUBLE_EQ(before.algorithms.at(a).ratio_median, after.algorithms.at(a).ratio_median);
  }
}

TEST(CompressionReport, SingleTinyChainFits) {
  const auto c = qa::cert::load_chain_file(qa::testing::data_path("certs/min-ecdsa256-selfsigned.pem"));
  const auto r = compression_report({c}, {1357}, 0);
  for (auto a : kAllAlgorithms) EXPECT_DOUBLE_EQ(r.algorithms.at(a).fit_fraction.at(1357), 1.0);
  EXPECT_THROW(compression_report({}), qa::ConfigError);
}
