#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "quicaudit/handshake/trace.hpp"

namespace quicaudit::handshake {

inline constexpr const char* kTraceSchema = "quicaudit.trace/1";

// Line-delimited JSON. Each trace starts with a {"type":"trace",...} header
// line followed by one {"type":"datagram",...} line per datagram. Datagram
// lines without a preceding header form a single trace whose Initial size is
// taken from the first datagram and whose outcome is COMPLETED.
void write_trace_jsonl(std::ostream& out, const HandshakeTrace& trace);
std::string to_jsonl(const HandshakeTrace& trace);

std::vector<HandshakeTrace> read_traces_jsonl(std::istream& in);
std::vector<HandshakeTrace> read_traces_jsonl_file(const std::string& path);

}  // namespace quicaudit::handshake
