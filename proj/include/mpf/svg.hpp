#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mpf/common.hpp"

namespace mpf::io {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Quartiles {
  double lo = 0.0;      // minimum
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double hi = 0.0;      // maximum
};

// Linear-interpolation quantiles (the common "type 7" rule).
Quartiles quartiles(std::vector<double> values);
double quantile_sorted(const std::vector<double>& sorted, double q);

// Self-contained SVG line chart: axes, ticks, legend, one polyline per
// series. Empty series lists render axes only.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series);

// Box plot (median, quartile box, min/max whiskers) per labelled group.
void write_box_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& ylabel,
                    const std::vector<std::pair<std::string, std::vector<double>>>& groups);

// Generic CSV -> line chart: first column is x, every other column a series.
void plot_csv_file(const std::filesystem::path& csv_path, const std::filesystem::path& svg_path);

}  // namespace mpf::io
