#include "quicaudit/compress/lab.hpp"

#include <brotli/decode.h>
#include <brotli/encode.h>
#include <zlib.h>
#include <zstd.h>

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "quicaudit/cert/analysis.hpp"
#include "quicaudit/error.hpp"

namespace quicaudit::compress {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kZlib: return "zlib";
    case Algorithm::kBrotli: return "brotli";
    case Algorithm::kZstd: return "zstd";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view s) {
  for (auto a : kAllAlgorithms)
    if (to_string(a) == s) return a;
  throw ConfigError("unsupported compression algorithm '" + std::string(s) + "'");
}

Bytes compress(Algorithm a, ByteView data, const Settings& s) {
  Bytes out;
  switch (a) {
    case Algorithm::kZlib: {
      uLongf len = compressBound(static_cast<uLong>(data.size()));
      out.resize(len);
      if (compress2(out.data(), &len, data.data(), static_cast<uLong>(data.size()), s.zlib_level) != Z_OK)
        throw Error("zlib compression failed");
      out.resize(len);
      break;
    }
    case Algorithm::kBrotli: {
      std::size_t len = BrotliEncoderMaxCompressedSize(data.size());
      if (len == 0) len = data.size() + 1024;
      out.resize(len);
      if (!BrotliEncoderCompress(s.brotli_quality, s.brotli_lgwin, BROTLI_MODE_GENERIC, data.size(), data.data(),
                                 &len, out.data()))
        throw Error("brotli compression failed");
      out.resize(len);
      break;
    }
    case Algorithm::kZstd: {
      out.resize(ZSTD_compressBound(data.size()));
      const std::size_t len = ZSTD_compress(out.data(), out.size(), data.data(), data.size(), s.zstd_level);
      if (ZSTD_isError(len)) throw Error(std::string("zstd compression failed: ") + ZSTD_getErrorName(len));
      out.resize(len);
      break;
    }
  }
  return out;
}

Bytes decompress(Algorithm a, ByteView payload, std::size_t original_len) {
  Bytes out(original_len);
  std::size_t got = 0;
  switch (a) {
    case Algorithm::kZlib: {
      uLongf len = static_cast<uLongf>(original_len);
      if (uncompress(out.data(), &len, payload.data(), static_cast<uLong>(payload.size())) != Z_OK)
        throw Error("zlib payload is corrupt or larger than expected");
      got = len;
      break;
    }
    case Algorithm::kBrotli: {
      std::size_t len = original_len;
      if (BrotliDecoderDecompress(payload.size(), payload.data(), &len, out.data()) != BROTLI_DECODER_RESULT_SUCCESS)
        throw Error("brotli payload is corrupt or larger than expected");
      got = len;
      break;
    }
    case Algorithm::kZstd: {
      got = ZSTD_decompress(out.data(), out.size(), payload.data(), payload.size());
      if (ZSTD_isError(got)) throw Error(std::string("zstd payload is corrupt: ") + ZSTD_getErrorName(got));
      break;
    }
  }
  if (got != original_len) throw Error("decompressed length does not match the original");
  return out;
}

CompressionOutcome compress_chain(const cert::ChainRecord& chain, Algorithm a, const Settings& s,
                                  const std::vector<std::uint32_t>& budgets, std::uint64_t overhead) {
  const Bytes der = cert::to_der(chain);
  CompressionOutcome o;
  o.domain = chain.domain;
  o.algorithm = a;
  o.payload = compress(a, der, s);
  o.original_len = der.size();
  o.compressed_len = o.payload.size();
  o.remaining_share = der.empty() ? 0.0 : static_cast<double>(o.compressed_len) / static_cast<double>(o.original_len);
  o.ratio = 1.0 - o.remaining_share;
  for (auto b : budgets) o.fits_under[b] = o.compressed_len + overhead <= 3ull * b;
  return o;
}

CompressionReport compression_report(const std::vector<cert::ChainRecord>& chains,
                                     const std::vector<std::uint32_t>& budgets, std::uint64_t overhead,
                                     const Settings& s, const std::vector<Algorithm>& algorithms) {
  if (chains.empty()) throw ConfigError("compression report needs at least one chain");
  CompressionReport report;
  report.budgets = budgets;
  report.overhead = overhead;
  const double n = static_cast<double>(chains.size());
  for (auto a : algorithms) {
    AlgorithmSummary sum;
    std::vector<double> ratios, remaining;
    std::map<std::uint32_t, std::size_t> plain_fit;
    for (const auto& c : chains) {
      const auto o = compress_chain(c, a, s, budgets, overhead);
      ratios.push_back(o.ratio);
      remaining.push_back(o.remaining_share);
      for (const auto& [b, fits] : o.fits_under) sum.fit_count[b] += fits ? 1 : 0;
      for (auto b : budgets) plain_fit[b] += c.total_len + overhead <= 3ull * b ? 1 : 0;
    }
    sum.chains = chains.size();
    sum.ratio_median = cert::median(ratios);
    sum.remaining_median = cert::median(remaining);
    sum.ratio_mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / n;
    sum.remaining_mean = std::accumulate(remaining.begin(), remaining.end(), 0.0) / n;
    for (auto b : budgets) {
      sum.fit_fraction[b] = static_cast<double>(sum.fit_count[b]) / n;
      sum.uncompressed_fit_fraction[b] = static_cast<double>(plain_fit[b]) / n;
    }
    report.algorithms[a] = std::move(sum);
  }
  return report;
}

std::vector<std::string> outcome_csv_header() {
  return {"domain", "algorithm", "original_len", "compressed_len", "ratio", "fits_3x1200", "fits_3x1357"};
}

std::vector<std::string> outcome_csv_row(const CompressionOutcome& o) {
  char ratio[32];
  std::snprintf(ratio, sizeof(ratio), "%.6f", o.ratio);
  auto fit = [&](std::uint32_t b) {
    auto it = o.fits_under.find(b);
    return it == o.fits_under.end() ? std::string() : std::string(it->second ? "1" : "0");
  };
  return {o.domain, std::string(to_string(o.algorithm)), std::to_string(o.original_len),
          std::to_string(o.compressed_len), ratio, fit(1200), fit(1357)};
}

}  // namespace quicaudit::compress
