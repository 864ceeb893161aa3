#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quicaudit/bytes.hpp"
#include "quicaudit/stats.hpp"

namespace quicaudit::backscatter {

struct BackscatterRecord {
  std::string src_ip;
  std::string dst_ip;
  std::int64_t time_us = 0;
  std::uint32_t udp_len = 0;
  Bytes scid;
  std::optional<std::string> provider_label;

  bool operator==(const BackscatterRecord&) const = default;
};

// IPv4 prefix -> provider, longest match wins.
class PrefixMap {
 public:
  // "a.b.c.d/len". Throws ConfigError.
  void add(const std::string& cidr, const std::string& provider);
  std::optional<std::string> lookup(const std::string& ip) const;
  std::size_t size() const { return entries_.size(); }

  // CSV with header "prefix,provider".
  static PrefixMap load_csv(const std::string& path);
  static PrefixMap read_csv(std::istream& in);

 private:
  struct Entry {
    std::uint32_t network;
    int len;
    std::string provider;
  };
  std::vector<Entry> entries_;
};

inline constexpr const char* kUnmappedProvider = "OTHER";
inline constexpr double kDefaultSessionGapS = 300.0;

struct Session {
  std::string provider;
  Bytes scid;
  std::uint64_t total_bytes = 0;
  std::int64_t first_us = 0;
  std::int64_t last_us = 0;
  std::size_t records = 0;

  double duration_s() const { return static_cast<double>(last_us - first_us) / 1e6; }
  bool operator==(const Session&) const = default;
};

// Groups records by (provider, SCID); a gap longer than gap_s within one
// key starts a new session. The provider comes from the prefix map, then
// the record's own label, then OTHER. Output is sorted by provider, SCID
// and start time, so it does not depend on input order.
std::vector<Session> sessionize(const std::vector<BackscatterRecord>& records, const PrefixMap& prefixes,
                                double gap_s = kDefaultSessionGapS);

struct ProviderDistribution {
  std::string provider;
  std::size_t sessions = 0;
  stats::BoxSummary factor;
  stats::BoxSummary duration_s;
  stats::BoxSummary bytes;
};

// factor = total_bytes / assumed_initial per session. Throws ConfigError
// when assumed_initial < 1200.
std::vector<ProviderDistribution> amplification_distribution(const std::vector<Session>& sessions,
                                                             std::uint32_t assumed_initial = 1362);

// Input formats: JSONL objects or CSV with header
// src_ip,dst_ip,time_us,udp_len,scid,provider (scid in hex).
std::vector<BackscatterRecord> read_records_jsonl(std::istream& in);
std::vector<BackscatterRecord> read_records_csv(std::istream& in);
// Picks the format from the extension (.csv, otherwise JSONL).
std::vector<BackscatterRecord> load_records(const std::string& path);
std::string to_json_line(const BackscatterRecord& r);

std::vector<std::string> summary_csv_header();
std::vector<std::string> summary_csv_row(const ProviderDistribution& d);

}  // namespace quicaudit::backscatter
