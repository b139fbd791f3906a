#pragma once

#include <string>
#include <utility>
#include <vector>

namespace rampcast::pipeline::svg {

/// Minimal SVG writer; coordinates in pixels, origin top-left.
class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none");
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
            const std::string& dash = "");
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5);
  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill,
               const std::string& stroke = "none");
  void circle(double cx, double cy, double r, const std::string& fill);
  /// anchor: start | middle | end. rotate in degrees about (x, y).
  void text(double x, double y, const std::string& s, double size = 12.0, const std::string& anchor = "start",
            double rotate = 0.0);

  double width() const noexcept { return w_; }
  double height() const noexcept { return h_; }
  std::string str() const;

 private:
  double w_, h_;
  std::string body_;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line
  std::string color = "#1f77b4";
  bool markers = true;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool zero_line = false;
  /// Vertical markers (x, color).
  std::vector<std::pair<double, std::string>> x_markers;
  /// Horizontal reference lines (y, color).
  std::vector<std::pair<double, std::string>> y_markers;

  void draw(Document& doc, double x0, double y0, double w, double h) const;
};

struct StackedBars {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<Series> stacks;  // y per category; x ignored

  void draw(Document& doc, double x0, double y0, double w, double h) const;
};

struct HexCell {
  double x = 0.0;
  double y = 0.0;
  double count = 0.0;
};

struct HexPanel {
  std::string title;
  double x_width = 0.25;
  double y_width = 0.028;
  std::vector<HexCell> cells;
  std::vector<std::pair<double, double>> ridge;  // (hour, y)
  double x_min = 0.0, x_max = 24.0;
  double y_min = 0.0, y_max = 1.0;

  void draw(Document& doc, double x0, double y0, double w, double h) const;
};

/// Rounded tick positions covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 6);
std::string palette(std::size_t i);

}  // namespace rampcast::pipeline::svg
