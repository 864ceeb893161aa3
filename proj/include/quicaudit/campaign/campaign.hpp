#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quicaudit/campaign/scan_record.hpp"
#include "quicaudit/cert/chain.hpp"
#include "quicaudit/clock.hpp"
#include "quicaudit/probe/config.hpp"
#include "quicaudit/probe/https.hpp"
#include "quicaudit/probe/transport.hpp"

namespace quicaudit::campaign {

struct DomainEntry {
  std::uint64_t rank = 1;
  std::string domain;
  bool operator==(const DomainEntry&) const = default;
};

// Tranco format: "rank,domain" rows, optional header. Throws ConfigError.
std::vector<DomainEntry> read_domain_list(std::istream& in);
std::vector<DomainEntry> load_domain_list(const std::filesystem::path& path);

enum Stage : unsigned { kStageDns = 1, kStageHttps = 2, kStageQuic = 4 };
// "dns,https,quic" in any order. Throws ConfigError.
unsigned parse_stages(std::string_view text);

inline constexpr const char* kResolverEnv = "QUICAUDIT_RESOLVER";
inline constexpr const char* kDefaultResolver = "1.1.1.1:53";
// $QUICAUDIT_RESOLVER if set, otherwise the public default.
std::string default_resolver();

struct CampaignConfig {
  unsigned stages = kStageDns | kStageHttps | kStageQuic;
  std::vector<std::uint32_t> initial_sizes = {1362};
  probe::ProbeMode mode = probe::ProbeMode::kComplete;
  double timeout_s = 10.0;
  double observation_window_s = 60.0;
  std::string alpn = "h3";
  std::uint16_t quic_port = 443;
  std::string resolver = kDefaultResolver;
  double dns_timeout_s = probe::kDefaultDnsTimeoutS;
  probe::HttpsOptions https;
  double spacing_s = 1800.0;  // between probes of one domain
  std::size_t concurrency = 64;
  handshake::LimitPolicy policy = handshake::LimitPolicy::rfc9000();
  std::filesystem::path out_dir;  // checkpoint, chains/, records.{csv,jsonl}
};

void validate(const CampaignConfig& cfg);

// Stage implementations. Defaults talk to the network; tests swap them.
struct CampaignDeps {
  std::function<probe::DnsOutcome(const std::string& domain)> resolve;
  std::function<probe::HttpsCollection(const std::string& domain, const std::string& ip)> collect_https;
  probe::QuicTransport* transport = nullptr;
  Clock* clock = nullptr;
  // Polled between work items; returning true stops the campaign early
  // with the checkpoint intact.
  std::function<bool()> cancelled;
};

struct CampaignResult {
  std::vector<ScanRecord> records;  // sorted by rank, domain, initial_size
  std::size_t resumed = 0;          // records taken over from the checkpoint
  std::size_t failures = 0;
  bool interrupted = false;

  // 0 success, 2 when any record carries a stage failure.
  int exit_code() const { return failures > 0 ? 2 : 0; }
};

inline constexpr const char* kCheckpointFile = "checkpoint.jsonl";

// Runs dns -> https -> quic for every (domain, initial size) pair with at
// most `concurrency` domains in flight. Every finished record is appended
// to out_dir/checkpoint.jsonl; a rerun skips pairs already there. Stage
// errors are recorded in the record, never thrown. QUIC is probed only for
// domains with an A record and, when the https stage runs, a collected
// chain. Throws ConfigError for an invalid configuration.
CampaignResult run_campaign(const std::vector<DomainEntry>& domains, const CampaignConfig& cfg,
                            CampaignDeps deps = {});

// True when the record's error comes from a failing stage rather than an
// observed outcome (NXDOMAIN, no HTTPS, UNREACHABLE probe, ...).
bool is_stage_failure(const ScanRecord& r);

// Reads a checkpoint, skipping a truncated last line.
std::vector<ScanRecord> read_checkpoint(const std::filesystem::path& file);

// Writes chains/<domain>.pem under dir and returns the relative path.
std::string export_chain_bundle(const std::filesystem::path& dir, const std::string& domain,
                                const cert::ChainRecord& chain);

struct RankGroup {
  std::uint64_t index = 0;  // 0-based
  std::uint64_t first_rank = 0;
  std::uint64_t last_rank = 0;
  std::size_t domains = 0;
  double quic_share = 0;        // QUIC-reachable domains / domains
  double https_only_share = 0;  // HTTPS but no QUIC / domains
  std::map<handshake::HandshakeClass, double> class_shares;  // over QUIC-reachable domains
};

struct RankGroupSummary {
  std::vector<RankGroup> groups;
  double quic_share_mean = 0;
  double quic_share_stddev = 0;  // population, over groups
};

// Groups domains by (rank - 1) / group_size. With several Initial sizes per
// domain, only records at `initial_size` count (all records when unset;
// then the first record per domain wins).
RankGroupSummary rank_group_summary(const std::vector<ScanRecord>& records, std::uint64_t group_size = 100'000,
                                    std::optional<std::uint32_t> initial_size = std::nullopt);

}  // namespace quicaudit::campaign
