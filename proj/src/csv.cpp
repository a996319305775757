#include "mpf/csv.hpp"

#include <cstdio>

namespace mpf::io {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out_) throw IoError("csv: cannot open " + path.string() + " for writing");
}

void CsvWriter::write_header(std::span<const std::string> cols) { write_row(cols); }

void CsvWriter::write_row(std::span<const std::string> cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw IoError("csv: write failed for " + path_.string());
}

void CsvWriter::write_row(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << fmt_double(values[i]);
  }
  out_ << '\n';
  if (!out_) throw IoError("csv: write failed for " + path_.string());
}

void CsvWriter::write_raw_line(const std::string& line) {
  out_ << line << '\n';
  if (!out_) throw IoError("csv: write failed for " + path_.string());
}

std::size_t CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("csv: no column named '" + name + "'");
}

double CsvTable::num(std::size_t row, std::size_t c) const {
  const std::string& cell = rows.at(row).at(c);
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw IoError("csv: cell '" + cell + "' at row " + std::to_string(row + 2) +
                  " is not a number");
  }
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const std::size_t c = col(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (c < rows[r].size()) out.push_back(num(r, c));
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("csv: cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      throw IoError("csv: " + path.string() + ":" + std::to_string(lineno) +
                    ": CR line ending (expected LF)");
    }
    if (line.empty()) {
      throw IoError("csv: " + path.string() + ":" + std::to_string(lineno) + ": empty line");
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (lineno == 1) {
      table.header = std::move(cells);
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) {
    throw IoError("csv: " + path.string() + ":1: missing header row");
  }
  return table;
}

}  // namespace mpf::io
