#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace switchminer {

using Json = nlohmann::json;

struct MalformedLine {
  std::filesystem::path file;
  std::size_t line_number = 0;  // 1-based
  std::string message;
  bool operator==(const MalformedLine&) const = default;
};

/// Reads a line-delimited JSON file. Blank lines are skipped; lines that do
/// not parse as a JSON object are reported through `malformed`.
std::vector<Json> read_jsonl(const std::filesystem::path& path, std::vector<MalformedLine>* malformed = nullptr);

struct NumberedRecord {
  std::size_t line_number = 0;
  Json value;
};

/// Like read_jsonl but keeps each record's 1-based line number.
std::vector<NumberedRecord> read_jsonl_numbered(const std::filesystem::path& path,
                                                std::vector<MalformedLine>* malformed = nullptr);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

/// Serializes with invalid UTF-8 replaced, so arbitrary provider text never throws.
std::string dump_json(const Json& value, int indent = -1);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace switchminer
