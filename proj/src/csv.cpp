#include "hjm/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hjm/error.hpp"

namespace hjm::csv {

int Table::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

int Table::require(const std::string& name) const {
  int c = column(name);
  if (c < 0) throw SchemaError("missing required column \"" + name + "\"");
  return c;
}

namespace {

std::vector<std::string> split_line(const std::string& line, std::size_t lineno,
                                    const std::string& origin) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted)
    throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated quote");
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

Table parse_stream(std::istream& in, const std::string& origin) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
      line.erase(0, 3);  // UTF-8 BOM
    if (line.empty() && t.header.empty()) continue;
    auto fields = split_line(line, lineno, origin);
    for (auto& f : fields) f = trim(f);
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size())
        throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(t.header.size()) + " fields, got " +
                         std::to_string(fields.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (t.header.empty()) throw SchemaError(origin + ": empty input");
  return t;
}

}  // namespace

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open \"" + path + "\"");
  return parse_stream(in, path);
}

Table read_string(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  return parse_stream(in, origin);
}

namespace {

std::string escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string to_string(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out += ',';
    out += escape(table.header[c]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += escape(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_file(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write \"" + path + "\"");
  out << to_string(table);
}

double parse_real(const std::string& cell, const std::string& context) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || cell.empty())
    throw ParseError(context + ": cannot parse \"" + cell + "\" as a real number");
  if (!std::isfinite(value))
    throw ParseError(context + ": non-finite value \"" + cell + "\"");
  return value;
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  double back = 0.0;
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    std::sscanf(buf, "%lf", &back);
    if (back == x) break;
  }
  return buf;
}

}  // namespace hjm::csv
