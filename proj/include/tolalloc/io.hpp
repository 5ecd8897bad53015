#pragma once

#include <filesystem>
#include <string>

namespace tolalloc {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Parses a full-token decimal real; throws ParseError otherwise.
double parse_double(const std::string& token);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`, so a failed write
/// never leaves partial output behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace tolalloc
