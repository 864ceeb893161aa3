#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "quicaudit/campaign/scan_record.hpp"

namespace quicaudit::campaign {

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kJsonlSchema = "quicaudit.scan/1";

std::vector<std::string> csv_header();
std::string to_csv_row(const ScanRecord& r);
ScanRecord from_csv_row(const std::vector<std::string>& fields);

std::string to_json_line(const ScanRecord& r);
ScanRecord from_json_line(std::string_view line);

void write_csv(std::ostream& out, const std::vector<ScanRecord>& records);
std::vector<ScanRecord> read_csv(std::istream& in);
void write_jsonl(std::ostream& out, const std::vector<ScanRecord>& records);
std::vector<ScanRecord> read_jsonl(std::istream& in);

// Writes records.csv and records.jsonl into `dir`. Each file is written
// to a temporary name first and renamed, so a failure leaves no partial
// file behind. Throws IoError.
void export_records(const std::filesystem::path& dir, const std::vector<ScanRecord>& records);
std::vector<ScanRecord> import_csv(const std::filesystem::path& file);
std::vector<ScanRecord> import_jsonl(const std::filesystem::path& file);

}  // namespace quicaudit::campaign
