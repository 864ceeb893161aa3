#include "quicaudit/handshake/trace_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "quicaudit/error.hpp"

namespace quicaudit::handshake {

using nlohmann::json;

namespace {

json frame_to_json(const FrameSummary& f) {
  return {{"kind", to_string(f.kind)},
          {"payload_len", f.payload_len},
          {"crypto_tls_len", f.crypto_tls_len}};
}

json packet_to_json(const PacketRecord& p) {
  json frames = json::array();
  for (const auto& f : p.frames) frames.push_back(frame_to_json(f));
  return {{"kind", to_string(p.kind)},
          {"wire_len", p.wire_len},
          {"scid", to_hex(p.scid)},
          {"dcid", to_hex(p.dcid)},
          {"frames", std::move(frames)}};
}

json datagram_to_json(const Datagram& d) {
  json packets = json::array();
  for (const auto& p : d.packets) packets.push_back(packet_to_json(p));
  return {{"type", "datagram"},
          {"direction", to_string(d.direction)},
          {"time_us", d.time_us},
          {"udp_len", d.udp_payload_len},
          {"trailing_padding", d.trailing_padding},
          {"packets", std::move(packets)}};
}

Datagram datagram_from_json(const json& j) {
  Datagram d;
  d.direction = parse_direction(j.at("direction").get<std::string>());
  d.time_us = j.at("time_us").get<std::int64_t>();
  d.udp_payload_len = j.at("udp_len").get<std::uint32_t>();
  d.trailing_padding = j.value("trailing_padding", 0u);
  for (const auto& jp : j.at("packets")) {
    PacketRecord p;
    p.kind = parse_packet_kind(jp.at("kind").get<std::string>());
    p.wire_len = jp.at("wire_len").get<std::uint32_t>();
    p.scid = from_hex(jp.value("scid", std::string()));
    p.dcid = from_hex(jp.value("dcid", std::string()));
    if (jp.contains("frames")) {
      for (const auto& jf : jp.at("frames")) {
        FrameSummary f;
        f.kind = parse_frame_kind(jf.at("kind").get<std::string>());
        f.payload_len = jf.at("payload_len").get<std::uint32_t>();
        f.crypto_tls_len = jf.value("crypto_tls_len", 0u);
        p.frames.push_back(f);
      }
    }
    d.packets.push_back(std::move(p));
  }
  return d;
}

}  // namespace

void write_trace_jsonl(std::ostream& out, const HandshakeTrace& trace) {
  json header = {{"type", "trace"},
                 {"schema", kTraceSchema},
                 {"target", trace.target},
                 {"client_initial_size", trace.client_initial_size},
                 {"outcome", to_string(trace.outcome)},
                 {"frames_visible", trace.frames_visible},
                 {"stateless_reset", trace.stateless_reset}};
  if (trace.handshake_confirmed_time_us)
    header["confirmed_time_us"] = *trace.handshake_confirmed_time_us;
  else
    header["confirmed_time_us"] = nullptr;
  out << header.dump() << '\n';
  for (const auto& d : trace.datagrams) out << datagram_to_json(d).dump() << '\n';
}

std::string to_jsonl(const HandshakeTrace& trace) {
  std::ostringstream out;
  write_trace_jsonl(out, trace);
  return out.str();
}

std::vector<HandshakeTrace> read_traces_jsonl(std::istream& in) {
  std::vector<HandshakeTrace> traces;
  bool implicit = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    try {
      const std::string type = j.value("type", std::string("datagram"));
      if (type == "trace") {
        HandshakeTrace t;
        t.target = j.value("target", std::string());
        t.client_initial_size = j.at("client_initial_size").get<std::uint32_t>();
        t.outcome = parse_outcome(j.at("outcome").get<std::string>());
        t.frames_visible = j.value("frames_visible", true);
        t.stateless_reset = j.value("stateless_reset", false);
        if (j.contains("confirmed_time_us") && !j.at("confirmed_time_us").is_null())
          t.handshake_confirmed_time_us = j.at("confirmed_time_us").get<std::int64_t>();
        traces.push_back(std::move(t));
        implicit = false;
      } else if (type == "datagram") {
        if (traces.empty()) {
          traces.emplace_back();
          traces.back().outcome = Outcome::kCompleted;
          implicit = true;
        }
        auto d = datagram_from_json(j);
        auto& t = traces.back();
        if (implicit && t.datagrams.empty()) t.client_initial_size = d.udp_payload_len;
        t.datagrams.push_back(std::move(d));
      } else {
        throw ParseError("unknown record type '" + type + "'", line_no);
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed trace record: ") + e.what(), line_no);
    }
  }
  return traces;
}

std::vector<HandshakeTrace> read_traces_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_traces_jsonl(in);
}

}  // namespace quicaudit::handshake
