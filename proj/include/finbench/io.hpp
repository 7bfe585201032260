#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finbench::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Throws Error(MissingFile) when the path does not exist.
std::string read_file(const fs::path& path);

// Writes to a sibling temp file, then renames over the target. Parent
// directories are created.
void write_file_atomic(const fs::path& path, std::string_view contents);

// One JSON value per non-empty line. Errors name the 1-based line.
std::vector<json> parse_jsonl(std::string_view contents, const std::string& origin);
std::vector<json> read_jsonl(const fs::path& path);

// Compact dump per value, each terminated by '\n'.
std::string to_jsonl(const std::vector<json>& rows);

json read_json(const fs::path& path);
std::string dump_json(const json& value);  // two-space indent, trailing '\n'

// Delimited text with a header row. CSV honours RFC 4180 quoting; TSV splits
// on tabs only.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table parse_csv(std::string_view contents);
Table parse_tsv(std::string_view contents);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

}  // namespace finbench::io
