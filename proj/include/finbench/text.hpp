#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace finbench::text {

std::string_view trim(std::string_view s);

// Trim, then collapse every internal run of whitespace to one space.
std::string normalize_whitespace(std::string_view s);

// ASCII-only lowercasing; multi-byte UTF-8 sequences pass through untouched.
std::string casefold(std::string_view s);

bool iequals(std::string_view a, std::string_view b);

// Splits on every occurrence of `delimiter`. An empty input yields one empty
// piece, mirroring the usual split semantics.
std::vector<std::string> split(std::string_view s, std::string_view delimiter);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_valid_utf8(std::string_view s);

}  // namespace finbench::text
