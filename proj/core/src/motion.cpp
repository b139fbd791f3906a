#include <algorithm>
#include <array>
#include <cmath>

#include "rampcast/error.hpp"
#include "rampcast/nowcast.hpp"

namespace rampcast::nowcast {

namespace {

struct Image {
  std::size_t rows = 0, cols = 0;
  std::vector<double> px;

  double at(long r, long c) const noexcept {
    r = std::clamp<long>(r, 0, long(rows) - 1);
    c = std::clamp<long>(c, 0, long(cols) - 1);
    return px[std::size_t(r) * cols + std::size_t(c)];
  }
};

Image blur_decimate(const Image& in) {
  static constexpr std::array<double, 5> k{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  Image tmp{in.rows, in.cols, std::vector<double>(in.px.size())};
  for (long r = 0; r < long(in.rows); ++r)
    for (long c = 0; c < long(in.cols); ++c) {
      double s = 0.0;
      for (long t = -2; t <= 2; ++t) s += k[std::size_t(t + 2)] * in.at(r, c + t);
      tmp.px[std::size_t(r) * in.cols + std::size_t(c)] = s;
    }
  Image out{(in.rows + 1) / 2, (in.cols + 1) / 2, {}};
  out.px.resize(out.rows * out.cols);
  for (long r = 0; r < long(out.rows); ++r)
    for (long c = 0; c < long(out.cols); ++c) {
      double s = 0.0;
      for (long t = -2; t <= 2; ++t) s += k[std::size_t(t + 2)] * tmp.at(2 * r + t, 2 * c);
      out.px[std::size_t(r) * out.cols + std::size_t(c)] = s;
    }
  return out;
}

struct Level {
  Image img, gx, gy;
};

std::vector<Level> pyramid(const RasterField& f, int levels) {
  std::vector<Level> out;
  Image cur{f.rows(), f.cols(), f.filled_values()};
  for (int l = 0; l < levels; ++l) {
    Level lv;
    lv.gx = Image{cur.rows, cur.cols, std::vector<double>(cur.px.size())};
    lv.gy = lv.gx;
    for (long r = 0; r < long(cur.rows); ++r)
      for (long c = 0; c < long(cur.cols); ++c) {
        const std::size_t i = std::size_t(r) * cur.cols + std::size_t(c);
        lv.gx.px[i] = 0.5 * (cur.at(r, c + 1) - cur.at(r, c - 1));
        lv.gy.px[i] = 0.5 * (cur.at(r + 1, c) - cur.at(r - 1, c));
      }
    lv.img = cur;
    out.push_back(std::move(lv));
    if (l + 1 < levels) {
      if (cur.rows < 4 || cur.cols < 4) break;
      cur = blur_decimate(cur);
    }
  }
  return out;
}

// Keys cubic convolution kernel (a = -0.5).
inline void cubic_weights(double t, double w[4]) noexcept {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = -0.5 * t3 + t2 - 0.5 * t;
  w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
  w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
  w[3] = 0.5 * t3 - 0.5 * t2;
}

double bicubic(const Image& im, double y, double x) noexcept {
  const double fy = std::floor(y), fx = std::floor(x);
  double wy[4], wx[4];
  cubic_weights(y - fy, wy);
  cubic_weights(x - fx, wx);
  const long r0 = long(fy) - 1, c0 = long(fx) - 1;
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int j = 0; j < 4; ++j) row += wx[j] * im.at(r0 + i, c0 + j);
    s += wy[i] * row;
  }
  return s;
}

struct Tensor {
  double xx = 0, xy = 0, yy = 0;
  double min_eigen() const noexcept {
    const double tr = 0.5 * (xx + yy);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (xx - yy) * (xx - yy) + xy * xy));
    return tr - disc;
  }
  double det() const noexcept { return xx * yy - xy * xy; }
};

struct WindowSpec {
  double row, col;  // level-0 center
  long r0, c0;      // level-0 first pixel
};

std::vector<long> window_starts(std::size_t n, int w, int stride) {
  std::vector<long> s;
  if (long(n) <= w) return {0};
  for (long p = 0; p + w <= long(n); p += stride) s.push_back(p);
  if (s.back() + w < long(n)) s.push_back(long(n) - w);
  return s;
}

std::vector<WindowSpec> window_layout(std::size_t rows, std::size_t cols, const LucasKanadeConfig& cfg) {
  std::vector<WindowSpec> out;
  const auto rs = window_starts(rows, cfg.window, cfg.stride);
  const auto cs = window_starts(cols, cfg.window, cfg.stride);
  const long wr = std::min<long>(cfg.window, long(rows)), wc = std::min<long>(cfg.window, long(cols));
  for (long r : rs)
    for (long c : cs) out.push_back({double(r) + 0.5 * double(wr - 1), double(c) + 0.5 * double(wc - 1), r, c});
  return out;
}

struct PairEstimate {
  double u = 0, v = 0;
  Tensor g;
  bool valid = false;
};

// Iterative LK at one level; d is in level pixels and updated in place.
// The floor is stated for the summed window tensor; track_level works with pixel means.
double averaged_floor(const LucasKanadeConfig& cfg) { return cfg.eigen_floor / double(cfg.window * cfg.window); }

bool track_level(const Level& prev, const Image& next, double cy, double cx, int w, double& dy, double& dx,
                 const LucasKanadeConfig& cfg, Tensor* tensor_out) {
  const long rows = long(prev.img.rows), cols = long(prev.img.cols);
  const long wr = std::min<long>(w, rows), wc = std::min<long>(w, cols);
  const long r0 = std::clamp<long>(std::lround(cy - 0.5 * double(wr - 1)), 0, rows - wr);
  const long c0 = std::clamp<long>(std::lround(cx - 0.5 * double(wc - 1)), 0, cols - wc);
  const double lo_y = rows >= 4 ? 1.0 : 0.0, hi_y = rows >= 4 ? double(rows - 2) : double(rows - 1);
  const double lo_x = cols >= 4 ? 1.0 : 0.0, hi_x = cols >= 4 ? double(cols - 2) : double(cols - 1);
  const std::size_t min_count = std::size_t(wr * wc) / 4;

  Tensor g;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    g = Tensor{};
    double bx = 0, by = 0;
    std::size_t n = 0;
    for (long r = r0; r < r0 + wr; ++r)
      for (long c = c0; c < c0 + wc; ++c) {
        const double y = double(r) + dy, x = double(c) + dx;
        // Samples that leave the frame carry content the earlier frame never saw.
        if (y < lo_y || y > hi_y || x < lo_x || x > hi_x) continue;
        const std::size_t i = std::size_t(r) * prev.img.cols + std::size_t(c);
        const double ix = prev.gx.px[i], iy = prev.gy.px[i];
        const double e = bicubic(next, y, x) - prev.img.px[i];
        g.xx += ix * ix;
        g.xy += ix * iy;
        g.yy += iy * iy;
        bx += ix * e;
        by += iy * e;
        ++n;
      }
    if (n < min_count || n == 0) return false;
    const double inv = 1.0 / double(n);
    g.xx *= inv;
    g.xy *= inv;
    g.yy *= inv;
    bx *= inv;
    by *= inv;
    if (!(g.min_eigen() >= averaged_floor(cfg))) {
      if (tensor_out) *tensor_out = g;
      return false;
    }
    const double det = g.det();
    const double ddx = -(g.yy * bx - g.xy * by) / det;
    const double ddy = -(-g.xy * bx + g.xx * by) / det;
    dx += ddx;
    dy += ddy;
    if (!std::isfinite(dx) || !std::isfinite(dy)) return false;
    if (std::hypot(ddx, ddy) < cfg.tolerance) break;
  }
  if (tensor_out) *tensor_out = g;
  return true;
}

std::vector<PairEstimate> track_pair(const std::vector<Level>& prev, const std::vector<Level>& next,
                                     const std::vector<WindowSpec>& windows, const LucasKanadeConfig& cfg) {
  std::vector<PairEstimate> out(windows.size());
  const int levels = int(std::min(prev.size(), next.size()));
  for (std::size_t k = 0; k < windows.size(); ++k) {
    double dy = 0.0, dx = 0.0;
    bool ok = false;
    Tensor g;
    for (int l = levels - 1; l >= 0; --l) {
      const double scale = std::ldexp(1.0, -l);
      double ty = dy, tx = dx;
      const bool good = track_level(prev[std::size_t(l)], next[std::size_t(l)].img, windows[k].row * scale,
                                    windows[k].col * scale, cfg.window, ty, tx, cfg, l == 0 ? &g : nullptr);
      if (good) {
        dy = ty;
        dx = tx;
      }
      if (l == 0) ok = good;
      if (l > 0) {
        dy *= 2.0;
        dx *= 2.0;
      }
    }
    out[k].g = g;
    out[k].u = dx;
    out[k].v = dy;
    out[k].valid = ok && std::fabs(dx) <= cfg.max_displacement && std::fabs(dy) <= cfg.max_displacement;
  }
  return out;
}

void check_config(const LucasKanadeConfig& cfg) {
  if (cfg.pyramid_levels < 1 || cfg.window < 2 || cfg.stride < 1 || !(cfg.eigen_floor > 0.0) ||
      !(cfg.max_displacement > 0.0) || cfg.max_iterations < 1)
    fail(Errc::InvalidArgument, "invalid Lucas-Kanade configuration");
}

}  // namespace

MotionField MotionField::uniform(const GridGeometry& g, double u, double v) {
  MotionField m;
  m.geometry = g;
  m.u.assign(g.size(), u);
  m.v.assign(g.size(), v);
  m.confidence.assign(g.size(), 1.0);
  return m;
}

double MotionField::mean_u() const {
  double s = 0.0;
  for (double x : u) s += x;
  return u.empty() ? 0.0 : s / double(u.size());
}

double MotionField::mean_v() const {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

std::vector<WindowEstimate> lucas_kanade_windows(const RasterField& prev, const RasterField& next,
                                                 const LucasKanadeConfig& cfg) {
  check_config(cfg);
  if (!(prev.geometry() == next.geometry())) fail(Errc::GeometryMismatch, "frame pair geometry differs");
  const auto windows = window_layout(prev.rows(), prev.cols(), cfg);
  const auto est = track_pair(pyramid(prev, cfg.pyramid_levels), pyramid(next, cfg.pyramid_levels), windows, cfg);
  std::vector<WindowEstimate> out(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k)
    out[k] = {windows[k].row, windows[k].col, est[k].u, est[k].v, est[k].g.min_eigen(), est[k].valid};
  return out;
}

MotionField estimate_cmv(const FieldSequence& seq, const LucasKanadeConfig& cfg) {
  check_config(cfg);
  if (seq.size() < 2) fail(Errc::TooFewFrames, "motion estimation needs at least 2 frames");
  const GridGeometry& geo = seq.geometry();
  const auto windows = window_layout(geo.nrows, geo.ncols, cfg);

  std::vector<std::vector<Level>> pyr;
  const std::size_t first = cfg.multi_pair ? 0 : seq.size() - 2;
  for (std::size_t i = first; i < seq.size(); ++i) pyr.push_back(pyramid(seq[i], cfg.pyramid_levels));

  // Information-weighted combination: d = (sum G_p)^-1 sum G_p d_p over valid pairs.
  std::vector<Tensor> gsum(windows.size());
  std::vector<std::array<double, 2>> hsum(windows.size(), {0.0, 0.0});
  std::vector<int> npairs(windows.size(), 0);
  for (std::size_t p = 0; p + 1 < pyr.size(); ++p) {
    const auto est = track_pair(pyr[p], pyr[p + 1], windows, cfg);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      if (!est[k].valid) continue;
      const Tensor& g = est[k].g;
      gsum[k].xx += g.xx;
      gsum[k].xy += g.xy;
      gsum[k].yy += g.yy;
      hsum[k][0] += g.xx * est[k].u + g.xy * est[k].v;
      hsum[k][1] += g.xy * est[k].u + g.yy * est[k].v;
      ++npairs[k];
    }
  }

  struct Sparse {
    double row, col, u, v, conf;
  };
  std::vector<Sparse> good;
  std::vector<double> window_conf(windows.size(), 0.0);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (npairs[k] == 0) continue;
    const Tensor& g = gsum[k];
    const double det = g.det();
    if (!(det > 0.0)) continue;
    const double u = (g.yy * hsum[k][0] - g.xy * hsum[k][1]) / det;
    const double v = (-g.xy * hsum[k][0] + g.xx * hsum[k][1]) / det;
    if (!std::isfinite(u) || !std::isfinite(v)) continue;
    const double lam = g.min_eigen() / double(npairs[k]);
    window_conf[k] = lam / (lam + averaged_floor(cfg));
    good.push_back({windows[k].row, windows[k].col, u, v, window_conf[k]});
  }

  MotionField m;
  m.geometry = geo;
  m.u.assign(geo.size(), 0.0);
  m.v.assign(geo.size(), 0.0);
  m.confidence.assign(geo.size(), 0.0);
  const long wr = std::min<long>(cfg.window, long(geo.nrows)), wc = std::min<long>(cfg.window, long(geo.ncols));
  for (std::size_t r = 0; r < geo.nrows; ++r)
    for (std::size_t c = 0; c < geo.ncols; ++c) {
      const std::size_t idx = r * geo.ncols + c;
      double su = 0.0, sv = 0.0, sw = 0.0;
      bool exact = false;
      for (const auto& s : good) {
        const double d2 = (double(r) - s.row) * (double(r) - s.row) + (double(c) - s.col) * (double(c) - s.col);
        if (d2 < 1e-18) {
          su = s.u;
          sv = s.v;
          sw = 1.0;
          exact = true;
          break;
        }
        const double w = std::pow(d2, -0.5 * cfg.idw_power);
        su += w * s.u;
        sv += w * s.v;
        sw += w;
      }
      if (sw > 0.0) {
        m.u[idx] = std::clamp(exact ? su : su / sw, -cfg.max_displacement, cfg.max_displacement);
        m.v[idx] = std::clamp(exact ? sv : sv / sw, -cfg.max_displacement, cfg.max_displacement);
      }
      double cs = 0.0;
      int cover = 0;
      for (std::size_t k = 0; k < windows.size(); ++k) {
        if (long(r) < windows[k].r0 || long(r) >= windows[k].r0 + wr || long(c) < windows[k].c0 ||
            long(c) >= windows[k].c0 + wc)
          continue;
        cs += window_conf[k];
        ++cover;
      }
      m.confidence[idx] = cover ? cs / cover : 0.0;
    }
  return m;
}

}  // namespace rampcast::nowcast
