#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace quicaudit::testing {

inline std::string data_path(const std::string& rel) { return std::string(QUICAUDIT_TEST_DATA) + "/" + rel; }
inline std::string oracle_path(const std::string& rel) { return std::string(QUICAUDIT_ORACLE_DIR) + "/" + rel; }

// Runs a shell command and returns its stdout; throws on a non-zero exit.
std::string run_command(const std::string& cmd);

std::vector<std::string> fixture_cert_files();
std::vector<std::string> corpus_chain_files();

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace quicaudit::testing
