#pragma once

#include <string>
#include <vector>

namespace kiqr::csv {

/// Header-first comma-separated table; cells are trimmed, no quoting.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source;

  /// Index of a header name, or -1.
  long column(const std::string& name) const;
};

Table read(const std::string& path);

/// Parses a finite double; the error names the file line and column.
double parse_number(const Table& table, std::size_t row, std::size_t col);

/// Shortest text that reads back to exactly the same double (17 significant digits).
std::string format_double(double value);

}  // namespace kiqr::csv
