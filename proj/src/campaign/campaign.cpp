#include "quicaudit/campaign/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "quicaudit/campaign/export.hpp"
#include "quicaudit/csv.hpp"
#include "quicaudit/error.hpp"
#include "quicaudit/net.hpp"
#include "quicaudit/stats.hpp"

namespace quicaudit::campaign {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::vector<DomainEntry> read_domain_list(std::istream& in) {
  std::vector<DomainEntry> out;
  std::vector<std::string> f;
  std::size_t line = 0;
  while (csv::read_record(in, f)) {
    ++line;
    if (f.size() == 1 && trim(f[0]).empty()) continue;
    if (f.size() != 2) throw ConfigError("domain list line " + std::to_string(line) + ": expected rank,domain");
    const std::string rank = trim(f[0]), domain = trim(f[1]);
    if (line == 1 && !rank.empty() && !std::isdigit(static_cast<unsigned char>(rank[0]))) continue;  // header
    DomainEntry e;
    try {
      std::size_t used = 0;
      e.rank = std::stoull(rank, &used);
      if (used != rank.size()) throw std::invalid_argument(rank);
    } catch (const std::exception&) {
      throw ConfigError("domain list line " + std::to_string(line) + ": bad rank '" + rank + "'");
    }
    if (e.rank < 1) throw ConfigError("domain list line " + std::to_string(line) + ": rank below 1");
    if (domain.empty()) throw ConfigError("domain list line " + std::to_string(line) + ": empty domain");
    e.domain = domain;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<DomainEntry> load_domain_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open domain list " + path.string());
  return read_domain_list(in);
}

unsigned parse_stages(std::string_view text) {
  unsigned stages = 0;
  std::stringstream ss{std::string(text)};
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part == "dns") stages |= kStageDns;
    else if (part == "https") stages |= kStageHttps;
    else if (part == "quic") stages |= kStageQuic;
    else throw ConfigError("unknown stage '" + part + "'");
  }
  if (stages == 0) throw ConfigError("no stages selected");
  return stages;
}

std::string default_resolver() {
  const char* env = std::getenv(kResolverEnv);
  return env && *env ? env : kDefaultResolver;
}

void validate(const CampaignConfig& cfg) {
  if (cfg.stages == 0 || cfg.stages > 7) throw ConfigError("invalid stage set");
  if (cfg.initial_sizes.empty()) throw ConfigError("no Initial sizes configured");
  for (auto size : cfg.initial_sizes) {
    probe::ProbeConfig p;
    p.target = {"x", "127.0.0.1", cfg.quic_port};
    p.initial_size = size;
    p.mode = cfg.mode;
    p.timeout_s = cfg.timeout_s;
    p.observation_window_s = cfg.observation_window_s;
    p.alpn = cfg.alpn;
    probe::validate(p);
  }
  if (cfg.concurrency == 0) throw ConfigError("concurrency must be at least 1");
  if (!(cfg.spacing_s >= 0)) throw ConfigError("spacing must not be negative");
  if (!(cfg.dns_timeout_s > 0)) throw ConfigError("DNS timeout must be positive");
  if (cfg.out_dir.empty()) throw ConfigError("output directory required");
  if (cfg.stages & kStageDns) net::parse_endpoint(cfg.resolver, 53);
}

bool is_stage_failure(const ScanRecord& r) {
  if (!r.error) return false;
  for (const char* prefix : {"dns failed:", "https failed:", "quic failed:"})
    if (r.error->rfind(prefix, 0) == 0) return true;
  return false;
}

std::vector<ScanRecord> read_checkpoint(const std::filesystem::path& file) {
  std::vector<ScanRecord> out;
  std::ifstream in(file);
  if (!in) return out;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.push_back(from_json_line(lines[i]));
    } catch (const ParseError&) {
      if (i + 1 == lines.size()) break;  // torn write at crash time
      throw;
    }
  }
  return out;
}

std::string export_chain_bundle(const std::filesystem::path& dir, const std::string& domain,
                                const cert::ChainRecord& chain) {
  std::string name;
  for (char c : domain) name += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
  if (name.empty() || name == "." || name == "..") name = "_" + name;
  std::error_code ec;
  std::filesystem::create_directories(dir / "chains", ec);
  if (ec) throw IoError("cannot create " + (dir / "chains").string() + ": " + ec.message());
  const std::string rel = "chains/" + name + ".pem";
  write_file_atomic((dir / rel).string(), cert::to_pem(chain));
  return rel;
}

namespace {

class CheckpointWriter {
 public:
  CheckpointWriter(const std::filesystem::path& file, const std::vector<ScanRecord>& existing) {
    // Rewrite first so a torn last line from a crash is dropped.
    std::ostringstream clean;
    for (const auto& r : existing) clean << to_json_line(r) << '\n';
    write_file_atomic(file.string(), clean.str());
    out_.open(file, std::ios::app);
    if (!out_) throw IoError("cannot open checkpoint " + file.string());
  }

  void append(const ScanRecord& r) {
    const std::string line = to_json_line(r) + "\n";
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
    if (!out_) throw IoError("checkpoint write failed");
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

std::string pair_key(const std::string& domain, std::uint32_t size) { return domain + "\n" + std::to_string(size); }

std::string https_reason(const probe::HttpsCollection& c) {
  for (auto it = c.path.rbegin(); it != c.path.rend(); ++it) {
    if (it->tls_error) return "https: TLS error: " + *it->tls_error;
    if (it->error) return "https: " + *it->error;
  }
  return "https: no certificate chain";
}

}  // namespace

CampaignResult run_campaign(const std::vector<DomainEntry>& domains, const CampaignConfig& cfg, CampaignDeps deps) {
  validate(cfg);
  SystemClock system_clock;
  Clock& clock = deps.clock ? *deps.clock : system_clock;
  probe::UdpTransport udp;
  probe::QuicTransport& transport = deps.transport ? *deps.transport : udp;
  if (!deps.resolve) {
    deps.resolve = [&cfg](const std::string& d) { return probe::resolve_domain(d, cfg.resolver, cfg.dns_timeout_s); };
  }
  if (!deps.collect_https) {
    deps.collect_https = [&cfg](const std::string& d, const std::string& ip) {
      probe::HttpsOptions opt = cfg.https;
      if (!opt.resolver) {
        // The apex resolves to the address from the dns stage; redirect
        // targets on other hosts go through the system resolver.
        opt.resolver = [d, ip, sys = probe::system_resolver()](const std::string& host) -> std::optional<std::string> {
          if (host == d) return ip;
          return sys(host);
        };
      }
      return probe::collect_https_chain(d, opt);
    };
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
  const auto checkpoint_path = cfg.out_dir / kCheckpointFile;

  CampaignResult result;
  std::set<std::string> done;
  for (auto& r : read_checkpoint(checkpoint_path)) {
    if (done.insert(pair_key(r.domain, r.initial_size)).second) {
      result.records.push_back(std::move(r));
      ++result.resumed;
    }
  }
  CheckpointWriter writer(checkpoint_path, result.records);
  SpacingLimiter limiter(clock, static_cast<std::int64_t>(std::llround(cfg.spacing_s * 1e6)));

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto cancelled = [&] {
    if (!stop && deps.cancelled && deps.cancelled()) stop = true;
    return stop.load();
  };
  auto emit = [&](ScanRecord r) {
    r.finished_us = std::max(r.finished_us, r.started_us);
    writer.append(r);
    std::lock_guard lock(mu);
    result.records.push_back(std::move(r));
  };

  auto process = [&](const DomainEntry& entry) {
    std::vector<std::uint32_t> sizes;
    for (auto s : cfg.initial_sizes)
      if (!done.count(pair_key(entry.domain, s))) sizes.push_back(s);
    if (sizes.empty()) return;

    ScanRecord base;
    base.domain = entry.domain;
    base.rank = entry.rank;
    base.started_us = clock.now_us();
    std::optional<std::string> domain_error;

    if (net::is_ipv4_literal(entry.domain)) {
      base.dns = {probe::DnsStatus::kARecord, {entry.domain}};
    } else if (cfg.stages & kStageDns) {
      try {
        base.dns = deps.resolve(entry.domain);
      } catch (const std::exception& e) {
        domain_error = std::string("dns failed: ") + e.what();
      }
    } else if (auto ip = probe::system_resolver()(entry.domain)) {
      base.dns = {probe::DnsStatus::kARecord, {*ip}};
    } else {
      base.dns = {probe::DnsStatus::kNxdomain, {}};
    }
    const bool resolved = !domain_error && base.dns.status == probe::DnsStatus::kARecord && !base.dns.addresses.empty();

    bool quic_allowed = resolved && (cfg.stages & kStageQuic);
    if (resolved && (cfg.stages & kStageHttps)) {
      try {
        const auto c = deps.collect_https(entry.domain, base.dns.addresses.front());
        if (c.chain) {
          base.https_ok = true;
          base.chain_len = c.chain->total_len;
          base.chain_ref = export_chain_bundle(cfg.out_dir, entry.domain, *c.chain);
        } else {
          domain_error = https_reason(c);
          quic_allowed = false;
        }
      } catch (const probe::RedirectLoopError& e) {
        domain_error = "https: redirect loop after " + std::to_string(e.path().size() - 1) + " hops";
        quic_allowed = false;
      } catch (const std::exception& e) {
        domain_error = std::string("https failed: ") + e.what();
        quic_allowed = false;
      }
    }

    for (auto size : sizes) {
      if (cancelled()) return;
      ScanRecord r = base;
      r.initial_size = size;
      if (!quic_allowed) {
        r.error = domain_error;
        r.finished_us = clock.now_us();
        emit(std::move(r));
        continue;
      }
      probe::ProbeConfig p;
      p.target = {entry.domain, base.dns.addresses.front(), cfg.quic_port};
      p.initial_size = size;
      p.mode = cfg.mode;
      p.timeout_s = cfg.timeout_s;
      p.observation_window_s = cfg.observation_window_s;
      p.alpn = cfg.alpn;
      r.started_us = limiter.acquire(entry.domain + "|quic:" + std::to_string(cfg.quic_port));
      try {
        attach_trace(r, probe::probe_once(p, transport), cfg.policy);
      } catch (const std::exception& e) {
        r.quic_attempted = true;
        r.quic.reset();
        r.error = std::string("quic failed: ") + e.what();
      }
      r.finished_us = clock.now_us();
      emit(std::move(r));
    }
  };

  const std::size_t workers = std::min(cfg.concurrency, domains.size());
  std::vector<std::thread> pool;
  std::exception_ptr fatal;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        if (cancelled()) return;
        const std::size_t i = next.fetch_add(1);
        if (i >= domains.size()) return;
        try {
          process(domains[i]);
        } catch (...) {  // checkpoint I/O; abort the run
          std::lock_guard lock(mu);
          if (!fatal) fatal = std::current_exception();
          stop = true;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  result.interrupted = stop.load();
  std::sort(result.records.begin(), result.records.end(), [](const ScanRecord& a, const ScanRecord& b) {
    return std::tie(a.rank, a.domain, a.initial_size) < std::tie(b.rank, b.domain, b.initial_size);
  });
  result.failures = static_cast<std::size_t>(std::count_if(result.records.begin(), result.records.end(), is_stage_failure));
  if (!result.interrupted) export_records(cfg.out_dir, result.records);
  return result;
}

RankGroupSummary rank_group_summary(const std::vector<ScanRecord>& records, std::uint64_t group_size,
                                    std::optional<std::uint32_t> initial_size) {
  if (group_size == 0) throw ConfigError("group size must be positive");
  std::map<std::string, const ScanRecord*> per_domain;
  for (const auto& r : records) {
    if (initial_size && r.initial_size != *initial_size) continue;
    per_domain.emplace(r.domain, &r);
  }
  std::map<std::uint64_t, std::vector<const ScanRecord*>> groups;
  for (const auto& [_, r] : per_domain) groups[(r->rank - 1) / group_size].push_back(r);

  RankGroupSummary out;
  std::vector<double> shares;
  for (const auto& [index, members] : groups) {
    RankGroup g;
    g.index = index;
    g.first_rank = index * group_size + 1;
    g.last_rank = (index + 1) * group_size;
    g.domains = members.size();
    std::size_t quic = 0, https_only = 0;
    std::map<handshake::HandshakeClass, std::size_t> classes;
    for (const auto* r : members) {
      if (r->quic_reachable()) {
        ++quic;
        ++classes[r->quic->klass];
      } else if (r->https_ok) {
        ++https_only;
      }
    }
    g.quic_share = static_cast<double>(quic) / static_cast<double>(g.domains);
    g.https_only_share = static_cast<double>(https_only) / static_cast<double>(g.domains);
    for (const auto& [k, n] : classes) g.class_shares[k] = static_cast<double>(n) / static_cast<double>(quic);
    shares.push_back(g.quic_share);
    out.groups.push_back(std::move(g));
  }
  out.quic_share_mean = stats::mean(shares);
  out.quic_share_stddev = stats::stddev(shares);
  return out;
}

}  // namespace quicaudit::campaign
