#include "tskit/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tskit/errors.hpp"

namespace tskit::cli {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& field) {
  if (field == "nan") return std::nan("");
  if (field == "inf") return INFINITY;
  if (field == "-inf") return -INFINITY;
  double x = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw InvalidArgument("not a number: '" + field + "'");
  }
  return x;
}

namespace {

void append_field(std::string& out, const CsvValue& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    out += format_double(*d);
  } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
    out += std::to_string(*i);
  } else {
    const auto& s = std::get<std::string>(v);
    if (s.find_first_of(",\n\"") != std::string::npos) throw InvalidArgument("csv field contains a separator: " + s);
    out += s;
  }
}

}  // namespace

std::string format_csv(const std::vector<std::string>& header, const std::vector<CsvRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw InvalidArgument("csv row has " + std::to_string(row.size()) + " fields, header has " +
                            std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_field(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<CsvRow>& rows) {
  const std::string text = format_csv(header, rows);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  CsvTable table;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(l);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!l.empty() && l.back() == ',') fields.emplace_back();
    return fields;
  };
  if (std::getline(in, line)) table.header = split(line);
  while (std::getline(in, line)) table.rows.push_back(split(line));
  return table;
}

}  // namespace tskit::cli
