#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace tskit::cli {

/// One CSV field. Doubles print with 17 significant digits; an empty string
/// leaves the field blank.
using CsvValue = std::variant<double, std::int64_t, std::string>;
using CsvRow = std::vector<CsvValue>;

/// Locale-independent formatting of a double, same digits as printf("%.17g").
std::string format_double(double x);

std::string format_csv(const std::vector<std::string>& header, const std::vector<CsvRow>& rows);

/// Writes header and rows with '\n' line endings. Throws IoError on failure
/// and InvalidArgument on ragged rows.
void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<CsvRow>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads back a file written by write_csv (no quoting support).
CsvTable read_csv(const std::string& path);

/// Exact inverse of format_double.
double parse_double(const std::string& field);

}  // namespace tskit::cli
