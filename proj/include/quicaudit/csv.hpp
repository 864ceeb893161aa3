#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace quicaudit::csv {

// RFC 4180 quoting: fields containing a comma, quote or line break are
// quoted, quotes doubled.
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

// Reads one record, which may span lines inside quotes. Returns false at EOF.
// Throws ParseError on an unterminated quote.
bool read_record(std::istream& in, std::vector<std::string>& fields);

}  // namespace quicaudit::csv
