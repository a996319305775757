#include "mpf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mpf/csv.hpp"

namespace mpf::io {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ConfigError("quantile: empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

Quartiles quartiles(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Quartiles q;
  q.lo = values.front();
  q.q1 = quantile_sorted(values, 0.25);
  q.median = quantile_sorted(values, 0.5);
  q.q3 = quantile_sorted(values, 0.75);
  q.hi = values.back();
  return q;
}

namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Scale {
  double lo = 0.0, hi = 1.0, span_px = 1.0, origin_px = 0.0;
  bool flip = false;

  double operator()(double v) const {
    double t = (v - lo) / (hi - lo);
    if (flip) t = 1.0 - t;
    return origin_px + t * span_px;
  }
};

std::string esc(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void expand(double& lo, double& hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

class SvgDoc {
 public:
  explicit SvgDoc(const std::filesystem::path& path) : path_(path) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_tick(kWidth) +
             "\" height=\"" + fmt_tick(kHeight) + "\" viewBox=\"0 0 " + fmt_tick(kWidth) + " " +
             fmt_tick(kHeight) + "\">\n";
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  void text(double x, double y, const std::string& s, const std::string& anchor = "middle",
            double size = 12.0, const std::string& fill = "#333") {
    body_ += "<text x=\"" + fmt_tick(x) + "\" y=\"" + fmt_tick(y) + "\" font-size=\"" +
             fmt_tick(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
             "\" fill=\"" + fill + "\">" + esc(s) + "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333",
            double width = 1.0) {
    body_ += "<line x1=\"" + fmt_tick(x1) + "\" y1=\"" + fmt_tick(y1) + "\" x2=\"" +
             fmt_tick(x2) + "\" y2=\"" + fmt_tick(y2) + "\" stroke=\"" + stroke +
             "\" stroke-width=\"" + fmt_tick(width) + "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "#333") {
    body_ += "<rect x=\"" + fmt_tick(x) + "\" y=\"" + fmt_tick(y) + "\" width=\"" + fmt_tick(w) +
             "\" height=\"" + fmt_tick(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
             "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) body_ += fmt_tick(x) + "," + fmt_tick(y) + " ";
    body_ += "\"/>\n";
  }

  void finish() {
    body_ += "</svg>\n";
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw IoError("svg: cannot open " + path_.string() + " for writing");
    out << body_;
  }

 private:
  std::string body_;
  std::filesystem::path path_;
};

void draw_axes(SvgDoc& doc, const Scale& sx, const Scale& sy, const std::string& title,
               const std::string& xlabel, const std::string& ylabel) {
  doc.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom);
  doc.line(kLeft, kTop, kLeft, kHeight - kBottom);
  doc.text(kWidth / 2.0, kTop - 16.0, title, "middle", 14.0);
  doc.text(kWidth / 2.0, kHeight - 10.0, xlabel);
  doc.text(16.0, kHeight / 2.0, ylabel, "middle", 12.0, "#333");
  for (int i = 0; i <= 5; ++i) {
    const double fx = static_cast<double>(i) / 5.0;
    const double vx = sx.lo + fx * (sx.hi - sx.lo);
    const double px = sx(vx);
    doc.line(px, kHeight - kBottom, px, kHeight - kBottom + 4.0);
    doc.text(px, kHeight - kBottom + 18.0, fmt_tick(vx), "middle", 10.0);
    const double vy = sy.lo + fx * (sy.hi - sy.lo);
    const double py = sy(vy);
    doc.line(kLeft - 4.0, py, kLeft, py);
    doc.text(kLeft - 8.0, py + 3.0, fmt_tick(vy), "end", 10.0);
  }
}

}  // namespace

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series) {
  double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
  bool any = false;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        any = true;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  expand(xlo, xhi);
  expand(ylo, yhi);

  Scale sx{xlo, xhi, kWidth - kLeft - kRight, kLeft, false};
  Scale sy{ylo, yhi, kHeight - kTop - kBottom, kTop, true};

  SvgDoc doc(path);
  draw_axes(doc, sx, sy, title, xlabel, ylabel);
  std::size_t color = 0;
  double legend_y = kTop + 6.0;
  for (const Series& s : series) {
    const std::string stroke = kPalette[color % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    pts.reserve(s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) pts.emplace_back(sx(s.x[i]), sy(s.y[i]));
    if (!pts.empty()) doc.polyline(pts, stroke);
    doc.line(kWidth - kRight - 110.0, legend_y, kWidth - kRight - 90.0, legend_y, stroke, 2.0);
    doc.text(kWidth - kRight - 84.0, legend_y + 4.0, s.label, "start", 10.0);
    legend_y += 14.0;
    color += 1;
  }
  doc.finish();
}

void write_box_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& ylabel,
                    const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
  double ylo = 0.0, yhi = 1.0;
  bool any = false;
  for (const auto& [label, values] : groups) {
    for (double v : values) {
      if (!any) {
        ylo = yhi = v;
        any = true;
      }
      ylo = std::min(ylo, v);
      yhi = std::max(yhi, v);
    }
  }
  expand(ylo, yhi);
  Scale sy{ylo, yhi, kHeight - kTop - kBottom, kTop, true};
  Scale sx{0.0, static_cast<double>(std::max<std::size_t>(groups.size(), 1)),
           kWidth - kLeft - kRight, kLeft, false};

  SvgDoc doc(path);
  draw_axes(doc, sx, sy, title, "", ylabel);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& [label, values] = groups[gi];
    const double cx = sx(static_cast<double>(gi) + 0.5);
    doc.text(cx, kHeight - kBottom + 32.0, label, "middle", 10.0);
    if (values.empty()) continue;
    const Quartiles q = quartiles(values);
    const double half = 0.18 * sx.span_px / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
    const std::string fill = kPalette[gi % std::size(kPalette)];
    doc.line(cx, sy(q.lo), cx, sy(q.q1));
    doc.line(cx, sy(q.q3), cx, sy(q.hi));
    doc.line(cx - half * 0.6, sy(q.lo), cx + half * 0.6, sy(q.lo));
    doc.line(cx - half * 0.6, sy(q.hi), cx + half * 0.6, sy(q.hi));
    doc.rect(cx - half, sy(q.q3), 2.0 * half, sy(q.q1) - sy(q.q3), fill + "33", fill);
    doc.line(cx - half, sy(q.median), cx + half, sy(q.median), fill, 2.0);
  }
  doc.finish();
}

void plot_csv_file(const std::filesystem::path& csv_path, const std::filesystem::path& svg_path) {
  CsvTable table = read_csv(csv_path);
  std::vector<Series> series;
  if (table.header.size() >= 2) {
    for (std::size_t c = 1; c < table.header.size(); ++c) {
      Series s;
      s.label = table.header[c];
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        // Skip trailer rows (e.g. the generation histories' `best,...` line).
        if (table.rows[r].size() != table.header.size()) continue;
        s.x.push_back(table.num(r, 0));
        s.y.push_back(table.num(r, c));
      }
      series.push_back(std::move(s));
    }
  }
  write_line_chart(svg_path, csv_path.filename().string(), table.header.empty() ? "" : table.header[0],
                   "value", series);
}

}  // namespace mpf::io
