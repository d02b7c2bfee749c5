// SPDX-License-Identifier: Apache-2.0
// Minimal comma-separated tables: no quoting, first line is the header.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace shadowgrid {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws ParseError naming `source` when absent.
  std::size_t column(std::string_view name) const;
  std::string source;
};

CsvTable parse_csv(std::string_view text, std::string source = "<memory>");
/// Throws IoError when the file cannot be read.
CsvTable read_csv(const std::filesystem::path& path);

/// Throws ParseError with the offending text and context.
double parse_double(std::string_view text, std::string_view context);
long long parse_integer(std::string_view text, std::string_view context);

/// Shortest representation that round-trips.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
/// Creates parent directories as needed; throws IoError.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace shadowgrid
