#include "quicaudit/backscatter/sessions.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <tuple>

#include "json.hpp"
#include "quicaudit/csv.hpp"
#include "quicaudit/error.hpp"

namespace quicaudit::backscatter {

namespace {

std::optional<std::uint32_t> ipv4(const std::string& s) {
  in_addr a{};
  if (::inet_pton(AF_INET, s.c_str(), &a) != 1) return std::nullopt;
  return ntohl(a.s_addr);
}

std::uint32_t mask(int len) { return len == 0 ? 0 : ~std::uint32_t{0} << (32 - len); }

}  // namespace

void PrefixMap::add(const std::string& cidr, const std::string& provider) {
  const auto slash = cidr.find('/');
  const auto ip = ipv4(cidr.substr(0, slash));
  int len = 32;
  if (slash != std::string::npos) {
    try {
      len = std::stoi(cidr.substr(slash + 1));
    } catch (const std::exception&) {
      len = -1;
    }
  }
  if (!ip || len < 0 || len > 32) throw ConfigError("invalid prefix '" + cidr + "'");
  entries_.push_back({*ip & mask(len), len, provider});
}

std::optional<std::string> PrefixMap::lookup(const std::string& ip) const {
  const auto addr = ipv4(ip);
  if (!addr) return std::nullopt;
  const Entry* best = nullptr;
  for (const auto& e : entries_)
    if ((*addr & mask(e.len)) == e.network && (!best || e.len > best->len)) best = &e;
  if (!best) return std::nullopt;
  return best->provider;
}

PrefixMap PrefixMap::read_csv(std::istream& in) {
  PrefixMap m;
  std::vector<std::string> f;
  bool first = true;
  while (csv::read_record(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (first && f.size() >= 1 && f[0] == "prefix") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 2) throw ConfigError("prefix CSV rows need prefix,provider");
    m.add(f[0], f[1]);
  }
  return m;
}

PrefixMap PrefixMap::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_csv(in);
}

std::vector<Session> sessionize(const std::vector<BackscatterRecord>& records, const PrefixMap& prefixes,
                                double gap_s) {
  if (!(gap_s >= 0)) throw ConfigError("session gap must not be negative");
  const auto gap_us = static_cast<std::int64_t>(gap_s * 1e6);
  std::map<std::pair<std::string, Bytes>, std::vector<const BackscatterRecord*>> groups;
  for (const auto& r : records) {
    std::string provider = prefixes.lookup(r.src_ip).value_or(r.provider_label.value_or(kUnmappedProvider));
    groups[{std::move(provider), r.scid}].push_back(&r);
  }
  std::vector<Session> out;
  for (auto& [key, members] : groups) {
    std::stable_sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
      return std::tie(a->time_us, a->udp_len, a->src_ip, a->dst_ip) <
             std::tie(b->time_us, b->udp_len, b->src_ip, b->dst_ip);
    });
    Session cur;
    for (const auto* r : members) {
      if (cur.records > 0 && r->time_us - cur.last_us > gap_us) {
        out.push_back(cur);
        cur = Session{};
      }
      if (cur.records == 0) {
        cur.provider = key.first;
        cur.scid = key.second;
        cur.first_us = r->time_us;
      }
      cur.last_us = r->time_us;
      cur.total_bytes += r->udp_len;
      ++cur.records;
    }
    if (cur.records > 0) out.push_back(cur);
  }
  return out;
}

std::vector<ProviderDistribution> amplification_distribution(const std::vector<Session>& sessions,
                                                             std::uint32_t assumed_initial) {
  if (assumed_initial < 1200) throw ConfigError("assumed Initial below 1200 bytes");
  std::map<std::string, std::vector<const Session*>> by_provider;
  for (const auto& s : sessions) by_provider[s.provider].push_back(&s);
  std::vector<ProviderDistribution> out;
  for (const auto& [provider, members] : by_provider) {
    std::vector<double> factors, durations, bytes;
    for (const auto* s : members) {
      factors.push_back(static_cast<double>(s->total_bytes) / assumed_initial);
      durations.push_back(s->duration_s());
      bytes.push_back(static_cast<double>(s->total_bytes));
    }
    out.push_back({provider, members.size(), stats::box_summary(factors), stats::box_summary(durations),
                   stats::box_summary(bytes)});
  }
  return out;
}

namespace {

BackscatterRecord from_json(const nlohmann::json& j) {
  BackscatterRecord r;
  r.src_ip = j.at("src_ip").get<std::string>();
  r.dst_ip = j.value("dst_ip", std::string());
  r.time_us = j.at("time_us").get<std::int64_t>();
  r.udp_len = j.at("udp_len").get<std::uint32_t>();
  r.scid = from_hex(j.at("scid").get<std::string>());
  if (j.contains("provider") && !j.at("provider").is_null()) r.provider_label = j.at("provider").get<std::string>();
  return r;
}

}  // namespace

std::vector<BackscatterRecord> read_records_jsonl(std::istream& in) {
  std::vector<BackscatterRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("backscatter line " + std::to_string(n) + ": " + e.what(), n);
    }
  }
  return out;
}

std::vector<BackscatterRecord> read_records_csv(std::istream& in) {
  std::vector<BackscatterRecord> out;
  std::vector<std::string> f;
  if (!csv::read_record(in, f)) return out;
  const std::vector<std::string> header = {"src_ip", "dst_ip", "time_us", "udp_len", "scid", "provider"};
  if (f != header) throw ParseError("backscatter CSV header must be " + csv::join(header), 0);
  std::size_t n = 1;
  while (csv::read_record(in, f)) {
    ++n;
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != header.size()) throw ParseError("backscatter CSV row " + std::to_string(n), n);
    BackscatterRecord r;
    try {
      r.src_ip = f[0];
      r.dst_ip = f[1];
      r.time_us = std::stoll(f[2]);
      r.udp_len = static_cast<std::uint32_t>(std::stoul(f[3]));
    } catch (const std::exception&) {
      throw ParseError("backscatter CSV row " + std::to_string(n), n);
    }
    r.scid = from_hex(f[4]);
    if (!f[5].empty()) r.provider_label = f[5];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BackscatterRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  const bool is_csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return is_csv ? read_records_csv(in) : read_records_jsonl(in);
}

std::string to_json_line(const BackscatterRecord& r) {
  nlohmann::json j = {{"src_ip", r.src_ip}, {"dst_ip", r.dst_ip}, {"time_us", r.time_us},
                      {"udp_len", r.udp_len}, {"scid", to_hex(r.scid)}};
  if (r.provider_label) j["provider"] = *r.provider_label;
  return j.dump();
}

std::vector<std::string> summary_csv_header() {
  return {"provider", "sessions", "factor_min", "factor_q1", "factor_median", "factor_q3", "factor_max",
          "factor_mean", "duration_median_s", "duration_max_s", "bytes_max"};
}

std::vector<std::string> summary_csv_row(const ProviderDistribution& d) {
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  return {d.provider, std::to_string(d.sessions), f(d.factor.min), f(d.factor.q1), f(d.factor.median),
          f(d.factor.q3), f(d.factor.max), f(d.factor.mean), f(d.duration_s.median), f(d.duration_s.max),
          std::to_string(static_cast<std::uint64_t>(d.bytes.max))};
}

}  // namespace quicaudit::backscatter
