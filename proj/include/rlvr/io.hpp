#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace rlvr {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string to_jsonl(const std::vector<nlohmann::json>& rows);

// ISO-8601 UTC with second resolution, e.g. 2025-01-31T12:00:00Z.
std::string utc_now_iso8601();

// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& data);

}  // namespace rlvr
