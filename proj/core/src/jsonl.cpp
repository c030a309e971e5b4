#include "switchminer/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "switchminer/error.hpp"

namespace switchminer {

std::vector<Json> read_jsonl(const std::filesystem::path& path, std::vector<MalformedLine>* malformed) {
  std::vector<Json> records;
  for (auto& r : read_jsonl_numbered(path, malformed)) records.push_back(std::move(r.value));
  return records;
}

std::vector<NumberedRecord> read_jsonl_numbered(const std::filesystem::path& path,
                                                std::vector<MalformedLine>* malformed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<NumberedRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json value = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded() || !value.is_object()) {
      if (malformed != nullptr) malformed->push_back({path, number, "not a JSON object"});
      continue;
    }
    records.push_back({number, std::move(value)});
  }
  return records;
}

std::string dump_json(const Json& value, int indent) {
  return value.dump(indent, ' ', false, Json::error_handler_t::replace);
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += dump_json(r);
    out += '\n';
  }
  write_text_file(path, out);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace switchminer
