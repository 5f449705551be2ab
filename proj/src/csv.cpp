#include "ringfiber/csv.hpp"

#include <cmath>
#include <cstdio>

#include "ringfiber/errors.hpp"

namespace ringfiber {

namespace {

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_cell(const CsvCell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return quoted(*s);
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  const double x = std::get<double>(cell);
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ConfigError("cannot write '" + path + "'");
  for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << quoted(header[k]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != columns_) throw DomainError("CSV row width does not match the header of " + path_);
  for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << format_cell(cells[k]);
  out_ << '\n';
  if (!out_) throw ConfigError("write to '" + path_ + "' failed");
}

}  // namespace ringfiber
