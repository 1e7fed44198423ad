#include "rwad/experiments/output.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace rwad::experiments {

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{:.17g}", v);
}

void CsvTable::add_row(std::vector<Cell> row) {
  if (row.size() != header_.size())
    throw std::logic_error(fmt::format("csv row has {} cells, header has {}", row.size(), header_.size()));
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t j = 0; j < header_.size(); ++j) {
    if (j) out += ',';
    out += header_[j];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += row[j].number ? format_number(*row[j].number) : row[j].text;
    }
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;
  double a = 0.0;  // pixel range
  double b = 1.0;

  double map(double v) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nice = f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

// Data range in axis units (log10 for log axes), padded and widened when flat.
std::pair<double, double> data_range(std::span<const Series> series, bool use_x, bool log,
                                     const std::optional<std::pair<double, double>>& fixed) {
  if (fixed) return log ? std::pair{std::log10(fixed->first), std::log10(fixed->second)} : *fixed;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Series& s : series)
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      const double w = log ? std::log10(v) : v;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= log ? 0.5 : std::max(0.5, 0.1 * std::abs(lo));
    hi += log ? 0.5 : std::max(0.5, 0.1 * std::abs(hi));
  }
  if (log) return {std::floor(lo), std::ceil(hi)};
  const double pad = use_x ? 0.0 : 0.04 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::vector<double> ticks(const Axis& ax) {
  std::vector<double> t;
  if (ax.log) {
    const int step = std::max(1, static_cast<int>(std::ceil((ax.hi - ax.lo) / 8.0)));
    for (int e = static_cast<int>(std::ceil(ax.lo)); e <= ax.hi + 1e-9; e += step) t.push_back(std::pow(10.0, e));
    return t;
  }
  const double step = nice_step(ax.hi - ax.lo, 8);
  for (double v = std::ceil(ax.lo / step - 1e-9) * step; v <= ax.hi + 1e-9 * step; v += step)
    t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

std::string tick_label(double v, bool log) {
  if (log) return fmt::format("1e{}", static_cast<int>(std::lround(std::log10(v))));
  return fmt::format("{:g}", v);
}

}  // namespace

std::string render_svg(const PlotSpec& spec, std::span<const Series> series) {
  const double w = spec.width;
  const double h = spec.height;
  const double left = 80, right = 190, top = 50, bottom = 70;
  Axis xa, ya;
  xa.log = spec.log_x;
  ya.log = spec.log_y;
  std::tie(xa.lo, xa.hi) = data_range(series, true, xa.log, spec.x_range);
  std::tie(ya.lo, ya.hi) = data_range(series, false, ya.log, spec.y_range);
  xa.a = left;
  xa.b = w - right;
  ya.a = h - bottom;
  ya.b = top;

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"13\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      spec.width, spec.height);
  out += fmt::format("<text x=\"{:.1f}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
                     (xa.a + xa.b) / 2, escape(spec.title));

  for (double t : ticks(xa)) {
    const double px = xa.map(t);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#e4e4e4\"/>\n", px,
                       ya.a, ya.b);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", px, ya.a + 20,
                       tick_label(t, xa.log));
  }
  for (double t : ticks(ya)) {
    const double py = ya.map(t);
    out += fmt::format("<line x1=\"{1:.2f}\" y1=\"{0:.2f}\" x2=\"{2:.2f}\" y2=\"{0:.2f}\" stroke=\"#e4e4e4\"/>\n", py,
                       xa.a, xa.b);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", xa.a - 8, py + 4,
                       tick_label(t, ya.log));
  }
  out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     xa.a, ya.b, xa.b - xa.a, ya.a - ya.b);
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (xa.a + xa.b) / 2, h - 22,
                     escape(spec.x_label));
  out += fmt::format("<text transform=\"translate(22 {:.2f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     (ya.a + ya.b) / 2, escape(spec.y_label));

  out += fmt::format("<clipPath id=\"plot\"><rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\"/></clipPath>\n",
                     xa.a, ya.b, xa.b - xa.a, ya.a - ya.b);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const std::string color = s.color.empty() ? kPalette[k % kPalette.size()] : s.color;
    const std::string dash = s.dashed ? " stroke-dasharray=\"6 4\"" : "";
    std::string points;
    auto flush = [&] {
      if (points.empty()) return;
      out += fmt::format("<polyline clip-path=\"url(#plot)\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{} points=\"{}\"/>\n",
                         color, dash, points);
      points.clear();
    };
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!xa.usable(s.x[i]) || !ya.usable(s.y[i])) {
        if (s.line) flush();
        continue;
      }
      const double px = xa.map(s.x[i]);
      const double py = ya.map(s.y[i]);
      if (s.line) points += fmt::format("{}{:.2f},{:.2f}", points.empty() ? "" : " ", px, py);
      if (s.markers)
        out += fmt::format("<circle clip-path=\"url(#plot)\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\"/>\n", px, py,
                           color);
    }
    if (s.line) flush();
    const double ly = top + 18.0 * static_cast<double>(k) + 8;
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2.5\"{4}/>\n",
                       xa.b + 15, ly, xa.b + 40, color, dash);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", xa.b + 46, ly + 4, escape(s.label));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace rwad::experiments
