#pragma once

#include <string>
#include <vector>

namespace hjm::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;       // -1 if absent
  int require(const std::string& name) const;      // SchemaError if absent
  const std::string& cell(std::size_t row, int col) const { return rows[row][col]; }
};

// Reads a comma-delimited UTF-8 file with a header row. Cells may be quoted
// with double quotes; embedded quotes are doubled. Throws SchemaError on an
// empty file and ParseError on ragged rows.
Table read_file(const std::string& path);
Table read_string(const std::string& text, const std::string& origin = "<string>");

void write_file(const std::string& path, const Table& table);
std::string to_string(const Table& table);

// Parses a real number; throws ParseError naming `context` if the cell does
// not fully parse or is non-finite.
double parse_real(const std::string& cell, const std::string& context);

std::string format_real(double x);  // shortest round-trip representation

}  // namespace hjm::csv
