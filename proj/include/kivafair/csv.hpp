#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kivafair::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, or -1.
  int column(std::string_view name) const;
};

/// RFC-4180 style fields on a single physical line (quoted fields may hold
/// commas and doubled quotes, not newlines).
std::vector<std::string> split_line(std::string_view line);

/// Throws kFileNotFound / kIoError. Strips a UTF-8 BOM and trailing CR.
Table read(const std::filesystem::path& path);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

/// Shortest text that parses back to the identical double.
std::string format_double(double value);
/// Strict parse; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);

}  // namespace kivafair::csv
