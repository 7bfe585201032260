#include "finbench/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

#include "finbench/common.hpp"
#include "finbench/text.hpp"

namespace finbench::io {

std::string read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::MissingFile, fmt::format("file not found: {}", path.string()));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += fmt::format(".tmp.{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Io, fmt::format("short write to {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::Io, fmt::format("cannot rename into {}: {}", path.string(), ec.message()));
  }
}

std::vector<json> parse_jsonl(std::string_view contents, const std::string& origin) {
  std::vector<json> rows;
  size_t line_no = 0;
  size_t start = 0;
  while (start < contents.size()) {
    size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    ++line_no;
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("{}:{}: invalid JSON: {}", origin, line_no, e.what()));
    }
  }
  return rows;
}

std::vector<json> read_jsonl(const fs::path& path) {
  return parse_jsonl(read_file(path), path.string());
}

std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  return out;
}

json read_json(const fs::path& path) {
  std::string contents = read_file(path);
  try {
    return json::parse(contents);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

std::string dump_json(const json& value) { return value.dump(2) + "\n"; }

namespace {

std::vector<std::vector<std::string>> split_records_csv(std::string_view s) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
      // handled by the '\n' branch
    } else if (c == '\n') {
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw Error(ErrorCode::MalformedRow, "unterminated quoted CSV field");
  if (any) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<std::vector<std::string>> split_records_tsv(std::string_view s) {
  std::vector<std::vector<std::string>> records;
  size_t start = 0;
  while (start < s.size()) {
    size_t end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view line = s.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    records.push_back(text::split(line, "\t"));
    start = end + 1;
  }
  return records;
}

Table to_table(std::vector<std::vector<std::string>> records) {
  Table table;
  // Blank lines carry no data.
  std::erase_if(records, [](const auto& r) { return r.size() == 1 && r[0].empty(); });
  if (records.empty()) return table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

std::string_view strip_bom(std::string_view s) {
  if (s.starts_with("\xEF\xBB\xBF")) s.remove_prefix(3);
  return s;
}

}  // namespace

Table parse_csv(std::string_view contents) {
  return to_table(split_records_csv(strip_bom(contents)));
}

Table parse_tsv(std::string_view contents) {
  return to_table(split_records_tsv(strip_bom(contents)));
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Internal, "sha256 failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace finbench::io
