#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quicaudit/cert/chain.hpp"

namespace quicaudit::cert {

// Self-signed roots indexed by DER subject.
class TrustStore {
 public:
  struct Root {
    Bytes subject;
    Sha256Digest spki_digest{};
    Bytes der;
    std::string subject_text;
  };

  // Throws ConfigError for a certificate that is not self-signed.
  void add(const CertRecord& cert);
  // Loads every *.pem / *.crt / *.cer file in `dir`. Certificates that are
  // not self-signed are skipped and counted.
  static TrustStore load_dir(const std::string& dir);
  static TrustStore from_certs(const std::vector<CertRecord>& certs);

  bool empty() const { return roots_.empty(); }
  std::size_t size() const { return roots_.size(); }
  std::size_t skipped() const { return skipped_; }
  // Root with this subject and key, if any.
  const Root* find(const Bytes& subject, const Sha256Digest& spki) const;

 private:
  std::multimap<Bytes, Root> roots_;
  std::size_t skipped_ = 0;
};

enum class FindingKind : std::uint8_t { kCrossSigned, kIncludedAnchor };
std::string_view to_string(FindingKind k);

struct Finding {
  FindingKind kind = FindingKind::kIncludedAnchor;
  std::size_t index = 0;       // position in the chain
  std::uint64_t savings = 0;   // bytes saved by acting on the recommendation
  std::string subject;
  std::string issuer;
  std::string recommendation;
};

// Non-leaf certificates whose subject and key match a trust-store root but
// which were issued by someone else.
std::vector<Finding> detect_cross_signed(const ChainRecord& chain, const TrustStore& store);
// Self-signed certificates shipped in the chain.
std::vector<Finding> detect_included_anchor(const ChainRecord& chain);

inline constexpr std::uint64_t kLargeChainThreshold = 4000;
inline bool is_large_chain(const ChainRecord& c) { return c.total_len > kLargeChainThreshold; }

struct LimitFit {
  bool fits = false;
  std::uint64_t budget = 0;
  std::uint64_t used = 0;
};
// fits <=> total_len + overhead <= 3 * initial_size. Throws ConfigError
// for initial sizes outside [1200, 65527].
LimitFit limit_fit(const ChainRecord& chain, std::uint32_t initial_size, std::uint64_t overhead = 0);

inline constexpr double kCruiseLinerShare = 0.289;
struct CruiseLinerScore {
  double san_share = 0.0;
  bool flagged = false;
};
CruiseLinerScore cruise_liner_score(const ChainRecord& chain);

// Per-field size samples by role group, mergeable across shards.
enum class RoleGroup : std::uint8_t { kLeaf, kNonLeaf };
std::string_view to_string(RoleGroup g);

struct FieldStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

class FieldAnatomy {
 public:
  void add(const ChainRecord& chain);
  void merge(const FieldAnatomy& other);

  std::size_t cert_count(RoleGroup g) const;
  FieldStats stats(RoleGroup g, Field f) const;
  FieldStats overhead_stats(RoleGroup g) const;
  // Fields sorted by descending mean for the group.
  std::vector<Field> ranking(RoleGroup g) const;

 private:
  std::array<std::array<std::vector<std::uint64_t>, kFieldCount>, 2> samples_;
  std::array<std::vector<std::uint64_t>, 2> overhead_;
};

FieldAnatomy field_anatomy(const std::vector<ChainRecord>& chains);

struct ParentGroup {
  std::string parent_chain_id;  // hex
  std::size_t service_count = 0;
  double coverage = 0.0;
  std::vector<std::uint64_t> non_leaf_sizes;
  std::uint64_t non_leaf_total = 0;
  double leaf_median = 0.0;
  std::uint64_t leaf_max = 0;
  std::vector<std::string> issuers;  // subject of each non-leaf cert
};

struct ParentGrouping {
  std::vector<ParentGroup> groups;  // descending coverage, ties by id
  std::size_t considered = 0;
  std::size_t excluded_unordered = 0;

  double top_coverage(std::size_t n) const;
};

// Chains that are not ordered correctly are excluded (and counted).
ParentGrouping parent_chain_group(const std::vector<ChainRecord>& chains);

struct KeyAlgoTable {
  // Row label is "<source> <role group>", e.g. "QUIC Leaf".
  std::vector<std::string> rows;
  std::vector<KeyAlgo> columns;  // algorithms above the share threshold
  std::map<std::string, std::map<KeyAlgo, double>> share;
  std::map<std::string, std::map<KeyAlgo, std::size_t>> counts;
  std::map<std::string, std::size_t> row_totals;
};

// Share of each key algorithm per (source, role group). Columns whose
// overall share is at most `min_share` are dropped from `columns`.
KeyAlgoTable key_algo_stats(const std::vector<ChainRecord>& chains, double min_share = 0.01);

double median(std::vector<double> values);
double median(const std::vector<std::uint64_t>& values);

// CSV: one row per certificate, one row per chain.
std::vector<std::string> cert_csv_header();
std::vector<std::vector<std::string>> cert_csv_rows(const ChainRecord& chain, const TrustStore* store = nullptr);
std::vector<std::string> chain_csv_header();
std::vector<std::string> chain_csv_row(const ChainRecord& chain, const TrustStore* store = nullptr);

}  // namespace quicaudit::cert
