#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "mpf/common.hpp"

namespace mpf::io {

// Formats a double with 17 significant digits (%.17g): enough to round-trip
// any float64 bit pattern through text.
std::string fmt_double(double v);

// Comma-separated, header row, LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void write_header(std::span<const std::string> cols);
  void write_row(std::span<const std::string> cells);
  void write_row(std::span<const double> values);
  void write_raw_line(const std::string& line);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const;  // throws IoError if missing
  double num(std::size_t row, std::size_t col) const;
  std::vector<double> column(const std::string& name) const;
};

// Parse errors report the file and 1-based line number.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace mpf::io
