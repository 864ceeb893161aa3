#include "quicaudit/campaign/export.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "quicaudit/bytes.hpp"
#include "quicaudit/csv.hpp"
#include "quicaudit/error.hpp"

namespace quicaudit::campaign {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_addresses(const std::vector<std::string>& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ";" : "") + a[i];
  return s;
}

std::vector<std::string> split_addresses(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ';'))
    if (!part.empty()) out.push_back(part);
  return out;
}

std::uint64_t to_u64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("bad ") + what + " '" + s + "'", 0);
  }
}

std::int64_t to_i64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("bad ") + what + " '" + s + "'", 0);
  }
}

bool to_bool(const std::string& s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError("bad boolean '" + s + "'", 0);
}

}  // namespace

std::vector<std::string> csv_header() {
  return {"schema_version", "domain", "rank", "initial_size", "dns_status", "dns_addresses",
          "https_ok", "chain_len", "chain_ref", "quic_attempted", "probe_outcome", "quic_class",
          "amplification_factor", "pre_validation_server_bytes", "pre_validation_client_bytes",
          "client_flights", "limit_exceeded", "multi_rtt_flag", "started_us", "finished_us", "error"};
}

std::string to_csv_row(const ScanRecord& r) {
  std::vector<std::string> f = {
      std::to_string(kCsvSchemaVersion),
      r.domain,
      std::to_string(r.rank),
      std::to_string(r.initial_size),
      std::string(probe::to_string(r.dns.status)),
      join_addresses(r.dns.addresses),
      r.https_ok ? "1" : "0",
      r.chain_len ? std::to_string(*r.chain_len) : "",
      r.chain_ref,
      r.quic_attempted ? "1" : "0",
      r.probe_outcome ? std::string(handshake::to_string(*r.probe_outcome)) : ""};
  if (r.quic) {
    const auto& q = *r.quic;
    f.insert(f.end(), {std::string(handshake::to_string(q.klass)), fmt_double(q.amplification_factor),
                       std::to_string(q.pre_validation_server_bytes),
                       std::to_string(q.pre_validation_client_bytes), std::to_string(q.client_flights),
                       q.limit_exceeded ? "1" : "0", q.multi_rtt_flag ? "1" : "0"});
  } else {
    f.insert(f.end(), 7, "");
  }
  f.push_back(std::to_string(r.started_us));
  f.push_back(std::to_string(r.finished_us));
  f.push_back(r.error.value_or(""));
  return csv::join(f);
}

ScanRecord from_csv_row(const std::vector<std::string>& f) {
  if (f.size() != csv_header().size())
    throw ParseError("scan CSV row has " + std::to_string(f.size()) + " fields", 0);
  if (f[0] != std::to_string(kCsvSchemaVersion)) throw ParseError("unsupported scan CSV schema " + f[0], 0);
  ScanRecord r;
  r.domain = f[1];
  r.rank = to_u64(f[2], "rank");
  r.initial_size = static_cast<std::uint32_t>(to_u64(f[3], "initial_size"));
  r.dns.status = probe::parse_dns_status(f[4]);
  r.dns.addresses = split_addresses(f[5]);
  r.https_ok = to_bool(f[6]);
  if (!f[7].empty()) r.chain_len = to_u64(f[7], "chain_len");
  r.chain_ref = f[8];
  r.quic_attempted = to_bool(f[9]);
  if (!f[10].empty()) r.probe_outcome = handshake::parse_outcome(f[10]);
  if (!f[11].empty()) {
    handshake::ClassificationResult q;
    q.klass = handshake::parse_handshake_class(f[11]);
    q.amplification_factor = std::stod(f[12]);
    q.pre_validation_server_bytes = to_u64(f[13], "server bytes");
    q.pre_validation_client_bytes = to_u64(f[14], "client bytes");
    q.client_flights = static_cast<std::uint32_t>(to_u64(f[15], "client_flights"));
    q.limit_exceeded = to_bool(f[16]);
    q.multi_rtt_flag = to_bool(f[17]);
    r.quic = q;
  }
  r.started_us = to_i64(f[18], "started_us");
  r.finished_us = to_i64(f[19], "finished_us");
  if (!f[20].empty()) r.error = f[20];
  return r;
}

std::string to_json_line(const ScanRecord& r) {
  json j = {{"schema", kJsonlSchema},
            {"domain", r.domain},
            {"rank", r.rank},
            {"initial_size", r.initial_size},
            {"dns", {{"status", probe::to_string(r.dns.status)}, {"addresses", r.dns.addresses}}},
            {"https_ok", r.https_ok},
            {"chain_len", r.chain_len ? json(*r.chain_len) : json(nullptr)},
            {"chain_ref", r.chain_ref},
            {"quic_attempted", r.quic_attempted},
            {"probe_outcome", r.probe_outcome ? json(handshake::to_string(*r.probe_outcome)) : json(nullptr)},
            {"started_us", r.started_us},
            {"finished_us", r.finished_us},
            {"error", r.error ? json(*r.error) : json(nullptr)}};
  if (r.quic) {
    const auto& q = *r.quic;
    j["quic"] = {{"class", handshake::to_string(q.klass)},
                 {"amplification_factor", q.amplification_factor},
                 {"pre_validation_server_bytes", q.pre_validation_server_bytes},
                 {"pre_validation_client_bytes", q.pre_validation_client_bytes},
                 {"client_flights", q.client_flights},
                 {"limit_exceeded", q.limit_exceeded},
                 {"multi_rtt_flag", q.multi_rtt_flag}};
  } else {
    j["quic"] = nullptr;
  }
  return j.dump();
}

ScanRecord from_json_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    if (j.at("schema").get<std::string>() != kJsonlSchema)
      throw ParseError("unsupported scan schema " + j.at("schema").get<std::string>(), 0);
    ScanRecord r;
    r.domain = j.at("domain").get<std::string>();
    r.rank = j.at("rank").get<std::uint64_t>();
    r.initial_size = j.at("initial_size").get<std::uint32_t>();
    r.dns.status = probe::parse_dns_status(j.at("dns").at("status").get<std::string>());
    r.dns.addresses = j.at("dns").at("addresses").get<std::vector<std::string>>();
    r.https_ok = j.at("https_ok").get<bool>();
    if (!j.at("chain_len").is_null()) r.chain_len = j.at("chain_len").get<std::uint64_t>();
    r.chain_ref = j.at("chain_ref").get<std::string>();
    r.quic_attempted = j.at("quic_attempted").get<bool>();
    if (!j.at("probe_outcome").is_null())
      r.probe_outcome = handshake::parse_outcome(j.at("probe_outcome").get<std::string>());
    if (!j.at("quic").is_null()) {
      const auto& q = j.at("quic");
      handshake::ClassificationResult c;
      c.klass = handshake::parse_handshake_class(q.at("class").get<std::string>());
      c.amplification_factor = q.at("amplification_factor").get<double>();
      c.pre_validation_server_bytes = q.at("pre_validation_server_bytes").get<std::uint64_t>();
      c.pre_validation_client_bytes = q.at("pre_validation_client_bytes").get<std::uint64_t>();
      c.client_flights = q.at("client_flights").get<std::uint32_t>();
      c.limit_exceeded = q.at("limit_exceeded").get<bool>();
      c.multi_rtt_flag = q.at("multi_rtt_flag").get<bool>();
      r.quic = c;
    }
    r.started_us = j.at("started_us").get<std::int64_t>();
    r.finished_us = j.at("finished_us").get<std::int64_t>();
    if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed scan record: ") + e.what(), 0);
  }
}

void write_csv(std::ostream& out, const std::vector<ScanRecord>& records) {
  out << csv::join(csv_header()) << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<ScanRecord> read_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!csv::read_record(in, fields)) return {};
  if (fields != csv_header()) throw ParseError("unexpected scan CSV header", 0);
  std::vector<ScanRecord> out;
  while (csv::read_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    out.push_back(from_csv_row(fields));
  }
  return out;
}

void write_jsonl(std::ostream& out, const std::vector<ScanRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<ScanRecord> read_jsonl(std::istream& in) {
  std::vector<ScanRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(from_json_line(line));
  return out;
}

void export_records(const std::filesystem::path& dir, const std::vector<ScanRecord>& records) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream csv_out;
  write_csv(csv_out, records);
  std::ostringstream jsonl_out;
  write_jsonl(jsonl_out, records);
  write_file_atomic((dir / "records.csv").string(), csv_out.str());
  write_file_atomic((dir / "records.jsonl").string(), jsonl_out.str());
}

std::vector<ScanRecord> import_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  return read_csv(in);
}

std::vector<ScanRecord> import_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  return read_jsonl(in);
}

}  // namespace quicaudit::campaign
