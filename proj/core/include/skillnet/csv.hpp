#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace skillnet::csv {

using Row = std::vector<std::string>;

// Splits one logical CSV record (RFC 4180 quoting). Returns false at end of input.
// Quoted fields may span physical lines.
bool read_row(std::istream& in, Row& row);

// Reads a whole file; the first row is returned separately as the header.
struct Table {
  Row header;
  std::vector<Row> rows;

  // Column index by header name, or -1.
  int column(std::string_view name) const;
};

Table read_table(const std::filesystem::path& path);
Table read_table(std::istream& in);

std::string quote(std::string_view field);
void write_row(std::ostream& out, const Row& row);

// Shortest decimal representation that round-trips.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace skillnet::csv
