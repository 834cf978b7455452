#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vulnatlas::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
/// A leading UTF-8 byte-order mark is skipped.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
/// One CSV record including the trailing newline.
std::string format_row(const std::vector<std::string>& fields);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip representation ("%.17g" trimmed), stable across runs.
std::string format_number(double value);
std::string format_fixed(double value, int digits);

}  // namespace vulnatlas::csv
