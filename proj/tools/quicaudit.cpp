#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "quicaudit/backscatter/sessions.hpp"
#include "quicaudit/campaign/campaign.hpp"
#include "quicaudit/campaign/export.hpp"
#include "quicaudit/cert/analysis.hpp"
#include "quicaudit/compress/lab.hpp"
#include "quicaudit/csv.hpp"
#include "quicaudit/error.hpp"
#include "quicaudit/handshake/analysis.hpp"
#include "quicaudit/handshake/trace_io.hpp"
#include "quicaudit/mock/server.hpp"
#include "quicaudit/net.hpp"
#include "quicaudit/probe/https.hpp"
#include "quicaudit/probe/sweep.hpp"

namespace qa = quicaudit;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 3;

// Writes to a file, or stdout for "-" / empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw qa::IoError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<std::uint32_t> parse_sizes(const std::vector<std::string>& items) {
  std::vector<std::uint32_t> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        out.push_back(static_cast<std::uint32_t>(std::stoul(part)));
      } catch (const std::exception&) {
        throw qa::ConfigError("bad size '" + part + "'");
      }
    }
  }
  return out;
}

// host[:port] -> Target with an IPv4 address.
qa::probe::Target resolve_target(const std::string& text, const std::string& resolver) {
  qa::probe::Target t;
  std::string host = text;
  const auto colon = text.rfind(':');
  if (colon != std::string::npos) {
    host = text.substr(0, colon);
    try {
      const auto p = std::stoul(text.substr(colon + 1));
      if (p == 0 || p > 65535) throw std::out_of_range("port");
      t.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
      throw qa::ConfigError("bad port in target '" + text + "'");
    }
  }
  if (host.empty()) throw qa::ConfigError("empty target host");
  t.domain = host;
  if (qa::net::is_ipv4_literal(host)) {
    t.ip = host;
  } else if (!resolver.empty()) {
    const auto r = qa::probe::resolve_domain(host, resolver);
    if (r.status != qa::probe::DnsStatus::kARecord) {
      throw qa::Error("cannot resolve " + host + ": " + std::string(qa::probe::to_string(r.status)));
    }
    t.ip = r.addresses.front();
  } else if (auto ip = qa::probe::system_resolver()(host)) {
    t.ip = *ip;
  } else {
    throw qa::Error("cannot resolve " + host);
  }
  return t;
}

void write_records_csv(const std::string& path, const std::vector<qa::campaign::ScanRecord>& records) {
  if (path.empty()) return;
  Output out(path);
  qa::campaign::write_csv(out.stream(), records);
}

void print_classification(std::ostream& err, const qa::campaign::ScanRecord& r) {
  err << r.domain << " initial=" << r.initial_size << " ";
  if (r.quic) {
    err << qa::handshake::to_string(r.quic->klass) << " factor=" << fmt(r.quic->amplification_factor, 3)
        << " server=" << r.quic->pre_validation_server_bytes << " client=" << r.quic->pre_validation_client_bytes
        << " flights=" << r.quic->client_flights;
  } else {
    err << "error=" << r.error.value_or("?");
  }
  err << "\n";
}

struct ProbeArgs {
  std::string target;
  std::uint32_t initial_size = 1362;
  std::string mode = "complete";
  double timeout_s = 10;
  double window_s = 60;
  std::string alpn = "h3";
  std::uint32_t mtu = 1500;
  std::string resolver;
  std::string out = "-";
  std::string csv;
};

void add_probe_options(CLI::App* cmd, ProbeArgs& a) {
  cmd->add_option("--target", a.target, "host[:port], port defaults to 443")->required();
  cmd->add_option("--mode", a.mode, "complete | no-ack")->capture_default_str();
  cmd->add_option("--timeout", a.timeout_s, "COMPLETE mode timeout in seconds")->capture_default_str();
  cmd->add_option("--window", a.window_s, "NO_ACK observation window in seconds")->capture_default_str();
  cmd->add_option("--alpn", a.alpn)->capture_default_str();
  cmd->add_option("--mtu", a.mtu, "local MTU; caps the Initial size")->capture_default_str();
  cmd->add_option("--resolver", a.resolver, "DNS resolver ip[:port] (system resolver if unset)");
  cmd->add_option("--out", a.out, "trace JSONL output, - for stdout")->capture_default_str();
  cmd->add_option("--csv", a.csv, "ScanRecord CSV output");
}

qa::probe::ProbeConfig probe_config(const ProbeArgs& a) {
  qa::probe::ProbeConfig cfg;
  cfg.initial_size = a.initial_size;
  cfg.mode = qa::probe::parse_probe_mode(a.mode);
  cfg.timeout_s = a.timeout_s;
  cfg.observation_window_s = a.window_s;
  cfg.alpn = a.alpn;
  cfg.mtu = a.mtu;
  qa::probe::validate(cfg);
  cfg.target = resolve_target(a.target, a.resolver);
  return cfg;
}

int run_probe(const ProbeArgs& a) {
  const auto cfg = probe_config(a);
  qa::probe::UdpTransport transport;
  qa::campaign::ScanRecord r;
  r.domain = cfg.target.domain;
  r.initial_size = cfg.initial_size;
  r.dns = {qa::probe::DnsStatus::kARecord, {cfg.target.ip}};
  qa::SystemClock clock;
  r.started_us = clock.now_us();
  const auto trace = qa::probe::probe_once(cfg, transport);
  r.finished_us = clock.now_us();
  qa::campaign::attach_trace(r, trace);
  Output out(a.out);
  qa::handshake::write_trace_jsonl(out.stream(), trace);
  write_records_csv(a.csv, {r});
  print_classification(std::cerr, r);
  return 0;
}

int run_sweep(const ProbeArgs& a, const qa::probe::SweepConfig& sc) {
  auto cfg = probe_config(a);
  qa::probe::UdpTransport transport;
  qa::SystemClock clock;
  Output out(a.out);
  const auto records = qa::probe::sweep(cfg, sc, transport, clock, [&](const qa::handshake::HandshakeTrace& t) {
    qa::handshake::write_trace_jsonl(out.stream(), t);
    out.stream().flush();
  });
  write_records_csv(a.csv, records);
  for (const auto& r : records) print_classification(std::cerr, r);
  return 0;
}

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

int run_mock_serve(const std::string& preset, const std::string& file, std::optional<std::uint32_t> chain_bytes,
                   const std::string& bind, std::uint16_t port, double duration_s) {
  qa::mock::BehaviorSpec spec = file.empty() ? qa::mock::preset(preset) : qa::mock::load_behavior_file(file);
  if (chain_bytes) spec.chain_len = *chain_bytes;
  qa::mock::validate(spec);
  qa::mock::UdpMockServer server(spec, bind + ":" + std::to_string(port));
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "mock '" << spec.name << "' listening on " << server.address() << " (flight " << spec.flight_bytes()
            << " B";
  if (spec.resend.kind == qa::mock::ResendKind::kUncapped) std::cerr << ", resends up to " << spec.resend.total_bytes << " B";
  std::cerr << ")\n";
  qa::SystemClock clock;
  const auto deadline = clock.now_us() + static_cast<std::int64_t>(duration_s * 1e6);
  while (!g_stop && (duration_s <= 0 || clock.now_us() < deadline)) clock.sleep_until_us(clock.now_us() + 50'000);
  server.stop();
  return 0;
}

int run_backscatter(const std::string& in, const std::string& prefixes, std::uint32_t assumed, double gap_s,
                    const std::string& out_path, const std::string& sessions_path) {
  const auto records = qa::backscatter::load_records(in);
  const auto map = prefixes.empty() ? qa::backscatter::PrefixMap{} : qa::backscatter::PrefixMap::load_csv(prefixes);
  const auto sessions = qa::backscatter::sessionize(records, map, gap_s);
  const auto dist = qa::backscatter::amplification_distribution(sessions, assumed);
  Output out(out_path);
  out.stream() << qa::csv::join(qa::backscatter::summary_csv_header()) << '\n';
  for (const auto& d : dist) out.stream() << qa::csv::join(qa::backscatter::summary_csv_row(d)) << '\n';
  if (!sessions_path.empty()) {
    Output s(sessions_path);
    s.stream() << "provider,scid,records,total_bytes,first_us,last_us,duration_s,factor\n";
    for (const auto& x : sessions)
      s.stream() << qa::csv::join({x.provider, qa::to_hex(x.scid), std::to_string(x.records),
                                   std::to_string(x.total_bytes), std::to_string(x.first_us), std::to_string(x.last_us),
                                   fmt(x.duration_s(), 6), fmt(static_cast<double>(x.total_bytes) / assumed, 6)})
                 << '\n';
  }
  std::cerr << records.size() << " records, " << sessions.size() << " sessions, " << dist.size() << " providers\n";
  return 0;
}

struct CampaignArgs {
  std::string domains;
  std::string stages = "dns,https,quic";
  std::vector<std::string> sizes = {"1362"};
  std::string spacing = "30m";
  std::string out;
  std::size_t concurrency = 64;
  std::string resolver;
  double timeout_s = 10;
  std::string mode = "complete";
  double window_s = 60;
  std::uint16_t quic_port = 443;
  std::uint16_t http_port = 80;
  std::uint16_t https_port = 443;
  std::uint64_t group_size = 100'000;
};

int run_campaign(const CampaignArgs& a) {
  qa::campaign::CampaignConfig cfg;
  cfg.stages = qa::campaign::parse_stages(a.stages);
  cfg.initial_sizes = parse_sizes(a.sizes);
  cfg.spacing_s = qa::probe::parse_duration_s(a.spacing);
  cfg.out_dir = a.out;
  cfg.concurrency = a.concurrency;
  cfg.resolver = a.resolver.empty() ? qa::campaign::default_resolver() : a.resolver;
  cfg.timeout_s = a.timeout_s;
  cfg.mode = qa::probe::parse_probe_mode(a.mode);
  cfg.observation_window_s = a.window_s;
  cfg.quic_port = a.quic_port;
  cfg.https.http_port = a.http_port;
  cfg.https.https_port = a.https_port;
  qa::campaign::validate(cfg);
  const auto domains = qa::campaign::load_domain_list(a.domains);

  const auto result = qa::campaign::run_campaign(domains, cfg);
  const auto summary = qa::campaign::rank_group_summary(result.records, a.group_size, cfg.initial_sizes.front());
  {
    std::ostringstream out;
    out << "group,first_rank,last_rank,domains,quic_share,https_only_share,ONE_RTT,RETRY,MULTI_RTT,AMPLIFICATION\n";
    using HC = qa::handshake::HandshakeClass;
    for (const auto& g : summary.groups) {
      auto share = [&](HC k) {
        auto it = g.class_shares.find(k);
        return fmt(it == g.class_shares.end() ? 0.0 : it->second, 6);
      };
      out << g.index << ',' << g.first_rank << ',' << g.last_rank << ',' << g.domains << ',' << fmt(g.quic_share, 6)
          << ',' << fmt(g.https_only_share, 6) << ',' << share(HC::kOneRtt) << ',' << share(HC::kRetry) << ','
          << share(HC::kMultiRtt) << ',' << share(HC::kAmplification) << '\n';
    }
    qa::write_file_atomic((cfg.out_dir / "rank_groups.csv").string(), out.str());
  }
  std::cerr << result.records.size() << " records (" << result.resumed << " resumed), " << result.failures
            << " stage failures; QUIC share mean " << fmt(100 * summary.quic_share_mean, 2) << "% sd "
            << fmt(100 * summary.quic_share_stddev, 2) << " pp over " << summary.groups.size() << " group(s)\n";
  return result.exit_code();
}

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (std::filesystem::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : std::filesystem::recursive_directory_iterator(in)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".pem" || ext == ".der" || ext == ".crt" || ext == ".cer"))
          found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  return files;
}

std::vector<qa::cert::ChainRecord> load_chains(const std::vector<std::string>& inputs, std::size_t& failed) {
  std::vector<qa::cert::ChainRecord> chains;
  for (const auto& f : expand_inputs(inputs)) {
    try {
      auto c = qa::cert::load_chain_file(f);
      c.domain = std::filesystem::path(f).stem().string();
      chains.push_back(std::move(c));
    } catch (const qa::Error& e) {
      ++failed;
      std::cerr << f << ": " << e.what() << "\n";
    }
  }
  return chains;
}

int run_certs(const std::vector<std::string>& inputs, const std::string& truststore, const std::string& certs_csv,
              const std::string& chains_csv, std::uint32_t initial_size) {
  std::size_t failed = 0;
  const auto chains = load_chains(inputs, failed);
  std::optional<qa::cert::TrustStore> store;
  if (!truststore.empty()) store = qa::cert::TrustStore::load_dir(truststore);
  const qa::cert::TrustStore* sp = store ? &*store : nullptr;

  if (!certs_csv.empty()) {
    Output out(certs_csv);
    out.stream() << qa::csv::join(qa::cert::cert_csv_header()) << '\n';
    for (const auto& c : chains)
      for (const auto& row : qa::cert::cert_csv_rows(c, sp)) out.stream() << qa::csv::join(row) << '\n';
  }
  Output out(chains_csv);
  out.stream() << qa::csv::join(qa::cert::chain_csv_header()) << '\n';
  for (const auto& c : chains) out.stream() << qa::csv::join(qa::cert::chain_csv_row(c, sp)) << '\n';

  for (const auto& c : chains) {
    const auto fit = qa::cert::limit_fit(c, initial_size);
    std::cerr << c.domain << ": " << c.certs.size() << " certs, " << c.total_len << " B"
              << (qa::cert::is_large_chain(c) ? " (large)" : "") << ", " << (fit.fits ? "fits" : "exceeds") << " 3x"
              << initial_size << (c.ordered_correctly ? "" : ", misordered") << "\n";
    auto findings = qa::cert::detect_included_anchor(c);
    if (sp) {
      auto cross = qa::cert::detect_cross_signed(c, *sp);
      findings.insert(findings.end(), cross.begin(), cross.end());
    }
    for (const auto& f : findings)
      std::cerr << "  " << qa::cert::to_string(f.kind) << " #" << f.index << " " << f.subject << ": "
                << f.recommendation << " (saves " << f.savings << " B)\n";
  }
  return failed > 0 ? 2 : 0;
}

int run_compress(const std::vector<std::string>& inputs, const std::string& out_path,
                 const std::vector<std::string>& budget_items, std::uint64_t overhead) {
  std::size_t failed = 0;
  const auto chains = load_chains(inputs, failed);
  const auto budgets = parse_sizes(budget_items);
  Output out(out_path);
  out.stream() << qa::csv::join(qa::compress::outcome_csv_header()) << '\n';
  for (const auto& c : chains)
    for (auto a : qa::compress::kAllAlgorithms)
      out.stream() << qa::csv::join(qa::compress::outcome_csv_row(qa::compress::compress_chain(c, a, {}, budgets, overhead)))
                   << '\n';
  if (!chains.empty()) {
    const auto report = qa::compress::compression_report(chains, budgets, overhead);
    for (const auto& [alg, s] : report.algorithms) {
      std::cerr << qa::compress::to_string(alg) << ": median reduction " << fmt(100 * s.ratio_median, 1)
                << "%, mean " << fmt(100 * s.ratio_mean, 1) << "%";
      for (auto b : budgets)
        std::cerr << "; fits 3x" << b << ": " << fmt(100 * s.fit_fraction.at(b), 1) << "% (uncompressed "
                  << fmt(100 * s.uncompressed_fit_fraction.at(b), 1) << "%)";
      std::cerr << "\n";
    }
  }
  return failed > 0 ? 2 : 0;
}

int run_classify(const std::string& in, const std::string& policy_name, const std::string& out_path) {
  const auto traces = qa::handshake::read_traces_jsonl_file(in);
  std::vector<qa::handshake::LimitPolicy> policies;
  if (policy_name == "all") policies = qa::handshake::all_limit_policies();
  else policies.push_back(qa::handshake::LimitPolicy::of(qa::handshake::parse_limit_variant(policy_name)));

  Output out(out_path);
  out.stream() << "target,initial_size,outcome,policy,class,amplification_factor,pre_validation_server_bytes,"
                  "pre_validation_client_bytes,client_flights,limit_exceeded,multi_rtt_flag,tls_bytes,"
                  "quic_header_bytes,padding_bytes,ack_overhead_bytes,max_packets_per_datagram,separate_ack_flight,"
                  "error\n";
  for (const auto& t : traces) {
    for (const auto& p : policies) {
      std::vector<std::string> row = {t.target, std::to_string(t.client_initial_size),
                                      std::string(qa::handshake::to_string(t.outcome)),
                                      std::string(qa::handshake::to_string(p.variant))};
      try {
        const auto r = qa::handshake::classify_handshake(t, p);
        row.insert(row.end(), {std::string(qa::handshake::to_string(r.klass)), fmt(r.amplification_factor, 6),
                               std::to_string(r.pre_validation_server_bytes),
                               std::to_string(r.pre_validation_client_bytes), std::to_string(r.client_flights),
                               r.limit_exceeded ? "1" : "0", r.multi_rtt_flag ? "1" : "0"});
        if (t.frames_visible) {
          const auto d = qa::handshake::payload_decomposition(t);
          row.insert(row.end(), {std::to_string(d.tls_bytes), std::to_string(d.quic_header_bytes),
                                 std::to_string(d.padding_bytes), std::to_string(d.ack_overhead_bytes)});
        } else {
          row.insert(row.end(), 4, "");
        }
        const auto c = qa::handshake::coalescence_report(t);
        row.insert(row.end(), {std::to_string(c.max_packets_per_datagram), c.separate_ack_flight ? "1" : "0", ""});
      } catch (const qa::Error& e) {
        row.resize(4);
        row.insert(row.end(), 13, "");
        row.push_back(e.what());
      }
      out.stream() << qa::csv::join(row) << '\n';
    }
  }
  return 0;
}

int run_grid(const std::string& transport_name, const qa::probe::SweepConfig& sc, double timeout_s) {
  const auto sizes = qa::probe::sweep_sizes(sc);
  std::size_t mismatches = 0, total = 0;
  std::cout << "behavior";
  for (auto s : sizes) std::cout << ',' << s;
  std::cout << '\n';
  for (const auto& row : qa::mock::behavior_grid(sizes)) {
    std::unique_ptr<qa::probe::QuicTransport> transport;
    std::unique_ptr<qa::mock::UdpMockServer> server;
    std::uint16_t port = 443;
    if (transport_name == "udp") {
      server = std::make_unique<qa::mock::UdpMockServer>(row.spec);
      port = server->port();
      transport = std::make_unique<qa::probe::UdpTransport>();
    } else if (transport_name == "sim") {
      transport = std::make_unique<qa::probe::SimulatedTransport>(row.spec);
    } else {
      throw qa::ConfigError("transport must be sim or udp");
    }
    std::cout << row.spec.name;
    for (const auto& [size, expected] : row.expected) {
      qa::probe::ProbeConfig cfg;
      cfg.target = {"grid.test", "127.0.0.1", port};
      cfg.initial_size = size;
      cfg.timeout_s = timeout_s;
      const auto trace = qa::probe::probe_once(cfg, *transport);
      std::string got;
      if (trace.outcome == qa::handshake::Outcome::kUnreachable) {
        got = "UNREACHABLE";
      } else {
        try {
          got = qa::handshake::to_string(qa::handshake::classify_handshake(trace).klass);
        } catch (const qa::Error&) {
          got = std::string(qa::handshake::to_string(trace.outcome));
        }
      }
      const bool ok = got == qa::mock::to_string(expected);
      mismatches += ok ? 0 : 1;
      ++total;
      std::cout << ',' << got << (ok ? "" : "!");
    }
    std::cout << '\n';
  }
  std::cerr << total - mismatches << "/" << total << " cells match the expected class\n";
  return mismatches == 0 ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QUIC handshake amplification auditing toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  ProbeArgs probe_args;
  auto* probe = app.add_subcommand("probe", "one QUIC handshake probe with an exact Initial size");
  add_probe_options(probe, probe_args);
  probe->add_option("--initial-size", probe_args.initial_size)->capture_default_str();

  ProbeArgs sweep_args;
  qa::probe::SweepConfig sweep_cfg;
  std::string sweep_spacing = "30m";
  auto* sweep = app.add_subcommand("sweep", "probe one target across a range of Initial sizes");
  add_probe_options(sweep, sweep_args);
  sweep->add_option("--from", sweep_cfg.from)->capture_default_str();
  sweep->add_option("--to", sweep_cfg.to)->capture_default_str();
  sweep->add_option("--step", sweep_cfg.step)->capture_default_str();
  sweep->add_option("--spacing", sweep_spacing, "pause between probes (30m, 10s, 0)")->capture_default_str();

  std::string mock_preset = "compliant", mock_file, mock_bind = "127.0.0.1";
  std::optional<std::uint32_t> mock_chain;
  std::uint16_t mock_port = 4433;
  double mock_duration = 0;
  auto* mock = app.add_subcommand("mock-serve", "run a mock QUIC server with a configurable behaviour");
  mock->add_option("--preset", mock_preset, "cloudflare|meta|meta-5x|retry|compliant|stall|capped")
      ->capture_default_str();
  mock->add_option("--behavior", mock_file, "behaviour JSON file (overrides --preset)");
  mock->add_option("--chain-bytes", mock_chain, "certificate chain bytes in the server flight");
  mock->add_option("--bind", mock_bind)->capture_default_str();
  mock->add_option("--port", mock_port, "UDP port, 0 for any")->capture_default_str();
  mock->add_option("--duration", mock_duration, "seconds to run, 0 until interrupted")->capture_default_str();

  std::string bs_in, bs_prefixes, bs_out = "-", bs_sessions;
  std::uint32_t bs_assumed = 1362;
  double bs_gap = qa::backscatter::kDefaultSessionGapS;
  auto* bs = app.add_subcommand("backscatter", "per-provider amplification of backscatter sessions");
  bs->add_option("--in", bs_in, "records (.jsonl or .csv)")->required();
  bs->add_option("--prefixes", bs_prefixes, "prefix,provider CSV");
  bs->add_option("--assumed-initial", bs_assumed)->capture_default_str();
  bs->add_option("--gap", bs_gap, "session gap in seconds")->capture_default_str();
  bs->add_option("--out", bs_out, "summary CSV")->capture_default_str();
  bs->add_option("--sessions", bs_sessions, "per-session CSV");

  CampaignArgs ca;
  auto* camp = app.add_subcommand("campaign", "resolve, collect HTTPS chains and probe QUIC for a domain list");
  camp->add_option("--domains", ca.domains, "rank,domain CSV (Tranco format)")->required();
  camp->add_option("--stages", ca.stages)->capture_default_str();
  camp->add_option("--initial-size", ca.sizes, "one or more sizes, comma separated")->capture_default_str();
  camp->add_option("--spacing", ca.spacing, "minimum pause between probes of one domain")->capture_default_str();
  camp->add_option("--out", ca.out, "output directory")->required();
  camp->add_option("--concurrency", ca.concurrency)->capture_default_str();
  camp->add_option("--resolver", ca.resolver, std::string("DNS resolver ip[:port]; default $") +
                                                  qa::campaign::kResolverEnv + " or " + qa::campaign::kDefaultResolver);
  camp->add_option("--timeout", ca.timeout_s)->capture_default_str();
  camp->add_option("--mode", ca.mode)->capture_default_str();
  camp->add_option("--window", ca.window_s)->capture_default_str();
  camp->add_option("--quic-port", ca.quic_port)->capture_default_str();
  camp->add_option("--http-port", ca.http_port)->capture_default_str();
  camp->add_option("--https-port", ca.https_port)->capture_default_str();
  camp->add_option("--rank-group-size", ca.group_size)->capture_default_str();

  std::vector<std::string> cert_inputs;
  std::string cert_trust, cert_csv, chain_csv = "-";
  std::uint32_t cert_initial = 1362;
  auto* certs = app.add_subcommand("certs", "per-field anatomy and structural checks of certificate chains");
  certs->add_option("inputs", cert_inputs, "chain files (PEM/DER) or directories")->required();
  certs->add_option("--truststore", cert_trust, "directory of trusted roots");
  certs->add_option("--certs-csv", cert_csv, "one row per certificate");
  certs->add_option("--chains-csv", chain_csv, "one row per chain")->capture_default_str();
  certs->add_option("--initial-size", cert_initial, "Initial size for the 3x fit check")->capture_default_str();

  std::vector<std::string> comp_inputs;
  std::string comp_out = "-";
  std::vector<std::string> comp_budgets = {"1200,1357"};
  std::uint64_t comp_overhead = qa::compress::kDefaultHandshakeOverhead;
  auto* comp = app.add_subcommand("compress", "certificate compression savings with zlib, brotli and zstd");
  comp->add_option("inputs", comp_inputs, "chain files or directories")->required();
  comp->add_option("--out", comp_out)->capture_default_str();
  comp->add_option("--budgets", comp_budgets, "Initial sizes for the 3x fit check")->capture_default_str();
  comp->add_option("--overhead", comp_overhead, "non-certificate handshake bytes")->capture_default_str();

  std::string cl_in, cl_policy = "DATA_3X_RFC9000", cl_out = "-";
  auto* classify = app.add_subcommand("classify", "classify recorded handshake traces");
  classify->add_option("--in", cl_in, "trace JSONL")->required();
  classify->add_option("--policy", cl_policy, "HANDSHAKE_PACKETS_3|DATAGRAMS_3|BYTES_3X|DATA_3X_RFC9000|all")
      ->capture_default_str();
  classify->add_option("--out", cl_out)->capture_default_str();

  std::string grid_transport = "sim";
  qa::probe::SweepConfig grid_cfg;
  double grid_timeout = 2;
  auto* grid = app.add_subcommand("grid", "probe the mock behaviour grid and compare with expected classes");
  grid->add_option("--transport", grid_transport, "sim | udp")->capture_default_str();
  grid->add_option("--from", grid_cfg.from)->capture_default_str();
  grid->add_option("--to", grid_cfg.to)->capture_default_str();
  grid->add_option("--step", grid_cfg.step)->capture_default_str();
  grid->add_option("--timeout", grid_timeout)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*probe) return run_probe(probe_args);
    if (*sweep) {
      sweep_cfg.spacing_s = qa::probe::parse_duration_s(sweep_spacing);
      return run_sweep(sweep_args, sweep_cfg);
    }
    if (*mock) return run_mock_serve(mock_preset, mock_file, mock_chain, mock_bind, mock_port, mock_duration);
    if (*bs) return run_backscatter(bs_in, bs_prefixes, bs_assumed, bs_gap, bs_out, bs_sessions);
    if (*camp) return run_campaign(ca);
    if (*certs) return run_certs(cert_inputs, cert_trust, cert_csv, chain_csv, cert_initial);
    if (*comp) return run_compress(comp_inputs, comp_out, comp_budgets, comp_overhead);
    if (*classify) return run_classify(cl_in, cl_policy, cl_out);
    if (*grid) return run_grid(grid_transport, grid_cfg, grid_timeout);
  } catch (const qa::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
