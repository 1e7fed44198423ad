#pragma once

// CSV tables and native SVG line plots.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rwad::experiments {

/// Columns of doubles written with 17 significant digits, so reruns are
/// byte-identical. Text columns are written verbatim.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  /// Cells are either numbers or preformatted text.
  struct Cell {
    Cell(double v) : number(v) {}
    Cell(int v) : number(v) {}
    Cell(long long v) : number(static_cast<double>(v)) {}
    Cell(std::string s) : text(std::move(s)) {}
    Cell(const char* s) : text(s) {}
    std::optional<double> number;
    std::string text;
  };

  void add_row(std::vector<Cell> row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

std::string format_number(double v);

/// Writes `content`, creating parent directories. Throws std::runtime_error on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

struct Series {
  explicit Series(std::string l = {}) : label(std::move(l)) {}

  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Empty selects from the palette by position.
  std::string color;
  bool markers = false;
  bool line = true;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 960;
  int height = 600;
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
};

/// One chart with axes, ticks, grid, legend, and one polyline per series.
/// Non-finite points (and nonpositive ones on log axes) break the polyline.
std::string render_svg(const PlotSpec& spec, std::span<const Series> series);

}  // namespace rwad::experiments
