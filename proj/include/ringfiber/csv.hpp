#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace ringfiber {

using CsvCell = std::variant<std::string, double, long long>;

// Formats doubles with 17 significant digits so values round-trip exactly.
std::string format_cell(const CsvCell& cell);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<CsvCell>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream out_;
};

}  // namespace ringfiber
