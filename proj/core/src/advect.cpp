#include <algorithm>
#include <cmath>

#include "rampcast/error.hpp"
#include "rampcast/nowcast.hpp"

namespace rampcast::nowcast {

RasterField advect(const RasterField& field, const MotionField& motion, int n_steps) {
  if (!(field.geometry() == motion.geometry) || motion.u.size() != field.size() || motion.v.size() != field.size())
    fail(Errc::GeometryMismatch, "motion field does not match the advected field");
  if (n_steps < 0) fail(Errc::InvalidArgument, "advection step count must be >= 0");
  RasterField out = field;
  if (n_steps == 0) return out;

  const std::size_t rows = field.rows(), cols = field.cols();
  const double n = double(n_steps);
  const double eps = 1e-9;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t idx = r * cols + c;
      double y = double(r) - n * motion.v[idx];
      double x = double(c) - n * motion.u[idx];
      if (y < -eps || y > double(rows - 1) + eps || x < -eps || x > double(cols - 1) + eps) {
        out.invalidate(idx);
        continue;
      }
      y = std::clamp(y, 0.0, double(rows - 1));
      x = std::clamp(x, 0.0, double(cols - 1));
      const std::size_t y0 = std::size_t(std::floor(y)), x0 = std::size_t(std::floor(x));
      const double fy = y - double(y0), fx = x - double(x0);
      const double wy[2] = {1.0 - fy, fy}, wx[2] = {1.0 - fx, fx};
      double sum = 0.0, wsum = 0.0;
      for (int a = 0; a < 2; ++a) {
        if (wy[a] == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
          if (wx[b] == 0.0) continue;
          const std::size_t src = (y0 + std::size_t(a)) * cols + x0 + std::size_t(b);
          if (!field.valid(src)) continue;
          const double w = wy[a] * wx[b];
          sum += w * field.value(src);
          wsum += w;
        }
      }
      if (wsum > 0.0)
        out.set(idx, sum / wsum);
      else
        out.invalidate(idx);
    }
  return out;
}

}  // namespace rampcast::nowcast
