#include "rampcast/pipeline/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rampcast/text.hpp"

namespace rampcast::pipeline::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

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

std::string tick_label(double v) {
  char buf[32];
  if (std::fabs(v) >= 1000 || (std::fabs(v) < 0.01 && v != 0.0))
    std::snprintf(buf, sizeof buf, "%.3g", v);
  else
    std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, y0, w, h;
  double xlo, xhi, ylo, yhi;
  double px(double x) const { return x0 + (x - xlo) / (xhi - xlo) * w; }
  double py(double y) const { return y0 + h - (y - ylo) / (yhi - ylo) * h; }
};

void axes(Document& doc, const Frame& f, const std::string& title, const std::string& xl, const std::string& yl,
          bool x_ticks = true) {
  doc.rect(f.x0, f.y0, f.w, f.h, "none", "#333333");
  doc.text(f.x0 + f.w / 2, f.y0 - 10, title, 14, "middle");
  doc.text(f.x0 + f.w / 2, f.y0 + f.h + 36, xl, 12, "middle");
  doc.text(f.x0 - 46, f.y0 + f.h / 2, yl, 12, "middle", -90);
  for (double t : nice_ticks(f.ylo, f.yhi)) {
    const double y = f.py(t);
    doc.line(f.x0, y, f.x0 + f.w, y, "#e0e0e0", 0.5);
    doc.text(f.x0 - 6, y + 4, tick_label(t), 10, "end");
  }
  if (x_ticks)
    for (double t : nice_ticks(f.xlo, f.xhi)) {
      const double x = f.px(t);
      doc.line(x, f.y0 + f.h, x, f.y0 + f.h + 4, "#333333", 1);
      doc.text(x, f.y0 + f.h + 16, tick_label(t), 10, "middle");
    }
}

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double c = std::isfinite(lo) ? lo : 0.0;
    return {c - 1.0, c + 1.0};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

Document::Document(double width, double height) : w_(width), h_(height) {}

void Document::rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, const std::string& stroke, double width,
                    const std::string& dash) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"" +
           (dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\"") + "/>\n";
}

void Document::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width) {
  if (pts.size() < 2) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" points=\"";
  for (const auto& [x, y] : pts) body_ += num(x) + "," + num(y) + " ";
  body_ += "\"/>\n";
}

void Document::polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill,
                       const std::string& stroke) {
  body_ += "<polygon fill=\"" + fill + "\" stroke=\"" + stroke + "\" points=\"";
  for (const auto& [x, y] : pts) body_ += num(x) + "," + num(y) + " ";
  body_ += "\"/>\n";
}

void Document::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>\n";
}

void Document::text(double x, double y, const std::string& s, double size, const std::string& anchor, double rotate) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\"";
  if (rotate != 0.0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
  body_ += ">" + escape(s) + "</text>\n";
}

std::string Document::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w_) + "\" height=\"" + num(h_) +
         "\" viewBox=\"0 0 " + num(w_) + " " + num(h_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         body_ + "</svg>\n";
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
  std::vector<double> out;
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return out;
  const double raw = (hi - lo) / double(std::max(target, 1));
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::fabs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

std::string palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

void LineChart::draw(Document& doc, double x0, double y0, double w, double h) const {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (zero_line) {
    ylo = std::min(ylo, 0.0);
    yhi = std::max(yhi, 0.0);
  }
  for (const auto& [y, c] : y_markers) {
    ylo = std::min(ylo, y);
    yhi = std::max(yhi, y);
  }
  const auto [a, b] = padded(xlo, xhi);
  const auto [c, d] = padded(ylo, yhi);
  const Frame f{x0, y0, w, h, a, b, c, d};
  axes(doc, f, title, x_label, y_label);
  if (zero_line) doc.line(x0, f.py(0.0), x0 + w, f.py(0.0), "#555555", 1, "4,3");
  for (const auto& [x, col] : x_markers) doc.line(f.px(x), y0, f.px(x), y0 + h, col, 1, "3,3");
  for (const auto& [y, col] : y_markers) doc.line(x0, f.py(y), x0 + w, f.py(y), col, 1, "6,3");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i <= s.x.size() && i <= s.y.size(); ++i) {
      const bool end = i == s.x.size() || i == s.y.size();
      if (end || !std::isfinite(s.y[i])) {
        doc.polyline(pts, s.color);
        pts.clear();
        if (end) break;
        continue;
      }
      pts.push_back({f.px(s.x[i]), f.py(s.y[i])});
      if (s.markers) doc.circle(f.px(s.x[i]), f.py(s.y[i]), 2.5, s.color);
    }
    // legend
    const double ly = y0 + 14 + 16 * double(k);
    doc.line(x0 + w - 150, ly - 4, x0 + w - 130, ly - 4, s.color, 2);
    doc.text(x0 + w - 125, ly, s.label, 11);
  }
}

void StackedBars::draw(Document& doc, double x0, double y0, double w, double h) const {
  const std::size_t n = categories.size();
  double top = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& s : stacks)
      if (i < s.y.size() && std::isfinite(s.y[i])) sum += s.y[i];
    top = std::max(top, sum);
  }
  const Frame f{x0, y0, w, h, 0.0, double(std::max<std::size_t>(n, 1)), 0.0, top > 0 ? top * 1.1 : 1.0};
  axes(doc, f, title, x_label, y_label, false);
  const double bw = w / double(std::max<std::size_t>(n, 1));
  for (std::size_t i = 0; i < n; ++i) {
    double base = 0.0;
    for (const auto& s : stacks) {
      const double v = i < s.y.size() && std::isfinite(s.y[i]) ? s.y[i] : 0.0;
      if (v > 0) doc.rect(f.px(double(i)) + 0.1 * bw, f.py(base + v), 0.8 * bw, f.py(base) - f.py(base + v), s.color);
      base += v;
    }
    if (n <= 24 || i % 2 == 0) doc.text(f.px(double(i) + 0.5), y0 + h + 16, categories[i], 10, "middle");
  }
  for (std::size_t k = 0; k < stacks.size(); ++k) {
    const double ly = y0 + 14 + 16 * double(k);
    doc.rect(x0 + 10, ly - 10, 12, 10, stacks[k].color);
    doc.text(x0 + 28, ly, stacks[k].label, 11);
  }
}

void HexPanel::draw(Document& doc, double x0, double y0, double w, double h) const {
  double ymax = y_max;
  double cmax = 0.0;
  for (const auto& c : cells) {
    ymax = std::max(ymax, c.y + y_width);
    cmax = std::max(cmax, c.count);
  }
  const Frame f{x0, y0, w, h, x_min, x_max, y_min, ymax};
  axes(doc, f, title, "hour of day (UTC)", "|dP| / threshold");
  // Pointy-top hexagon spanning one lattice cell horizontally.
  const double rx = 0.5 * x_width, ry = y_width / std::sqrt(3.0) * 1.0;
  for (const auto& c : cells) {
    if (c.count <= 0) continue;
    const double t = cmax > 0 ? std::log1p(c.count) / std::log1p(cmax) : 0.0;
    const int shade = int(std::lround(235.0 - 200.0 * t));
    char color[16];
    std::snprintf(color, sizeof color, "#%02x%02xff", shade, shade);
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k < 6; ++k) {
      const double ang = (60.0 * k + 30.0) * 3.14159265358979323846 / 180.0;
      pts.push_back({f.px(c.x + rx * std::cos(ang) / std::cos(3.14159265358979323846 / 6)), f.py(c.y + ry * std::sin(ang))});
    }
    doc.polygon(pts, color);
  }
  std::vector<std::pair<double, double>> ridge_pts;
  for (const auto& [x, y] : ridge) ridge_pts.push_back({f.px(x), f.py(y)});
  doc.polyline(ridge_pts, "#d62728", 1.5);
  doc.line(x0, f.py(1.0), x0 + w, f.py(1.0), "#555555", 1, "4,3");
}

}  // namespace rampcast::pipeline::svg
