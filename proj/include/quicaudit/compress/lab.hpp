#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "quicaudit/bytes.hpp"
#include "quicaudit/cert/chain.hpp"

namespace quicaudit::compress {

enum class Algorithm : std::uint8_t { kZlib, kBrotli, kZstd };
inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::kZlib, Algorithm::kBrotli, Algorithm::kZstd};

std::string_view to_string(Algorithm a);
// Throws ConfigError for names other than zlib, brotli and zstd.
Algorithm parse_algorithm(std::string_view s);

// Highest standard level of each library by default.
struct Settings {
  int zlib_level = 9;
  int brotli_quality = 11;
  int brotli_lgwin = 22;
  int zstd_level = 19;
};

// Handshake bytes besides the chain (ServerHello, EncryptedExtensions,
// CertificateVerify, Finished, packet overhead). Not measured, assumed.
inline constexpr std::uint64_t kDefaultHandshakeOverhead = 1100;
inline const std::vector<std::uint32_t> kDefaultBudgets = {1200, 1357};

Bytes compress(Algorithm a, ByteView data, const Settings& s = {});
// Throws Error when the payload is corrupt or does not expand to
// exactly original_len bytes.
Bytes decompress(Algorithm a, ByteView payload, std::size_t original_len);

struct CompressionOutcome {
  std::string domain;
  Algorithm algorithm = Algorithm::kZlib;
  std::uint64_t original_len = 0;
  std::uint64_t compressed_len = 0;
  double ratio = 0.0;            // 1 - compressed/original, may be negative
  double remaining_share = 0.0;  // compressed/original
  std::map<std::uint32_t, bool> fits_under;  // initial size -> compressed + overhead <= 3x
  Bytes payload;
};

// Compresses the concatenated DER of the chain.
CompressionOutcome compress_chain(const cert::ChainRecord& chain, Algorithm a, const Settings& s = {},
                                  const std::vector<std::uint32_t>& budgets = kDefaultBudgets,
                                  std::uint64_t overhead = kDefaultHandshakeOverhead);

struct AlgorithmSummary {
  std::size_t chains = 0;
  double ratio_median = 0.0;
  double ratio_mean = 0.0;
  double remaining_median = 0.0;
  double remaining_mean = 0.0;
  std::map<std::uint32_t, std::size_t> fit_count;
  std::map<std::uint32_t, double> fit_fraction;
  // Uncompressed chains that fit, for comparison.
  std::map<std::uint32_t, double> uncompressed_fit_fraction;
};

struct CompressionReport {
  std::map<Algorithm, AlgorithmSummary> algorithms;
  std::vector<std::uint32_t> budgets;
  std::uint64_t overhead = 0;
};

// Throws ConfigError for an empty corpus.
CompressionReport compression_report(const std::vector<cert::ChainRecord>& chains,
                                     const std::vector<std::uint32_t>& budgets = kDefaultBudgets,
                                     std::uint64_t overhead = kDefaultHandshakeOverhead,
                                     const Settings& s = {},
                                     const std::vector<Algorithm>& algorithms = {Algorithm::kZlib, Algorithm::kBrotli,
                                                                                 Algorithm::kZstd});

// domain, algorithm, original_len, compressed_len, ratio, fits_3x1200, fits_3x1357
std::vector<std::string> outcome_csv_header();
std::vector<std::string> outcome_csv_row(const CompressionOutcome& o);

}  // namespace quicaudit::compress
