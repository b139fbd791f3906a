#include <algorithm>
#include <cmath>
#include <limits>

#include "rampcast/error.hpp"
#include "rampcast/ingest.hpp"
#include "rampcast/parallel.hpp"

namespace rampcast::ingest {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCoordEps = 1e-9;
}  // namespace

void GridGeometry::validate() const {
  if (!(dlat > 0.0) || !(dlon > 0.0)) fail(Errc::InvalidArgument, "grid steps must be positive");
  if (nrows == 0 || ncols == 0) fail(Errc::InvalidArgument, "grid must have at least one cell");
  if (!std::isfinite(lat0) || !std::isfinite(lon0)) fail(Errc::InvalidArgument, "grid origin not finite");
}

std::string to_string(FieldKind kind) { return kind == FieldKind::SSI ? "SSI" : "CSI"; }

FieldKind parse_field_kind(const std::string& text) {
  if (text == "SSI" || text == "ssi") return FieldKind::SSI;
  if (text == "CSI" || text == "csi") return FieldKind::CSI;
  fail(Errc::ParseError, "unknown field kind: " + text);
}

RasterField::RasterField(const GridGeometry& geometry, Instant t, FieldKind kind, double fill)
    : geometry_(geometry),
      timestamp_(t),
      kind_(kind),
      values_(geometry.size(), fill),
      mask_(geometry.size(), std::isfinite(fill) ? 1 : 0) {
  geometry_.validate();
  if (!std::isfinite(fill)) std::fill(values_.begin(), values_.end(), kNaN);
}

RasterField::RasterField(const GridGeometry& geometry, Instant t, FieldKind kind,
                         std::vector<double> values, std::vector<std::uint8_t> mask)
    : geometry_(geometry), timestamp_(t), kind_(kind), values_(std::move(values)), mask_(std::move(mask)) {
  geometry_.validate();
  if (values_.size() != geometry_.size() || mask_.size() != geometry_.size())
    fail(Errc::GeometryMismatch, "value/mask size does not match grid");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!mask_[i] || !std::isfinite(values_[i])) {
      mask_[i] = 0;
      values_[i] = kNaN;
    } else {
      mask_[i] = 1;
    }
  }
}

RasterField::RasterField(const GridGeometry& geometry, Instant t, FieldKind kind, std::vector<double> values)
    : RasterField(geometry, t, kind, std::move(values), std::vector<std::uint8_t>(geometry.size(), 1)) {}

void RasterField::set(std::size_t idx, double v) noexcept {
  if (std::isfinite(v)) {
    values_[idx] = v;
    mask_[idx] = 1;
  } else {
    invalidate(idx);
  }
}

void RasterField::set(std::size_t r, std::size_t c, double v) noexcept { set(r * cols() + c, v); }

void RasterField::invalidate(std::size_t idx) noexcept {
  values_[idx] = kNaN;
  mask_[idx] = 0;
}

std::size_t RasterField::valid_count() const noexcept {
  return std::size_t(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

double RasterField::valid_mean() const noexcept {
  CompensatedSum sum;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (mask_[i]) {
      sum += values_[i];
      ++n;
    }
  }
  return n ? sum.value() / double(n) : kNaN;
}

std::vector<double> RasterField::filled_values() const {
  double mean = valid_mean();
  if (!std::isfinite(mean)) mean = 0.0;
  std::vector<double> out(values_);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!mask_[i]) out[i] = mean;
  return out;
}

FieldSequence::FieldSequence(std::vector<RasterField> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) return;
  const auto& g = fields_.front().geometry();
  const auto kind = fields_.front().kind();
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (!(fields_[i].geometry() == g))
      fail(Errc::GeometryMismatch, "frame " + format_iso8601(fields_[i].timestamp()) + " has a different grid");
    if (fields_[i].kind() != kind) fail(Errc::InvalidArgument, "mixed field kinds in sequence");
    if (i == 0) continue;
    const auto prev = fields_[i - 1].timestamp();
    const auto cur = fields_[i].timestamp();
    if (cur <= prev) fail(Errc::InvalidArgument, "timestamps not strictly increasing");
    if (cur - prev != kStep)
      fail(Errc::MissingFrame, "missing frame at " + format_iso8601(prev + kStep));
  }
}

FieldSequence FieldSequence::tail(std::size_t n) const {
  n = std::min(n, fields_.size());
  return FieldSequence(std::vector<RasterField>(fields_.end() - std::ptrdiff_t(n), fields_.end()));
}

RasterField crop(const RasterField& field, const BoundingBox& box) {
  const auto& g = field.geometry();
  std::size_t r0 = g.nrows, r1 = 0, c0 = g.ncols, c1 = 0;
  for (std::size_t r = 0; r < g.nrows; ++r) {
    const double lat = g.lat(r);
    if (lat >= box.lat_min - kCoordEps && lat <= box.lat_max + kCoordEps) {
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
    }
  }
  for (std::size_t c = 0; c < g.ncols; ++c) {
    const double lon = g.lon(c);
    if (lon >= box.lon_min - kCoordEps && lon <= box.lon_max + kCoordEps) {
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (r0 > r1 || c0 > c1) fail(Errc::InvalidArgument, "bounding box contains no cell centers");
  GridGeometry out_g = g;
  out_g.lat0 = g.lat(r0);
  out_g.lon0 = g.lon(c0);
  out_g.nrows = r1 - r0 + 1;
  out_g.ncols = c1 - c0 + 1;
  std::vector<double> values(out_g.size());
  std::vector<std::uint8_t> mask(out_g.size());
  for (std::size_t r = 0; r < out_g.nrows; ++r) {
    for (std::size_t c = 0; c < out_g.ncols; ++c) {
      values[r * out_g.ncols + c] = field(r0 + r, c0 + c);
      mask[r * out_g.ncols + c] = field.valid(r0 + r, c0 + c) ? 1 : 0;
    }
  }
  return RasterField(out_g, field.timestamp(), field.kind(), std::move(values), std::move(mask));
}

RasterField downsample_2x2(const RasterField& field) {
  const auto& g = field.geometry();
  if (g.nrows % 2 != 0 || g.ncols % 2 != 0)
    fail(Errc::OddDimensions, "downsample_2x2 needs even dimensions, got " + std::to_string(g.nrows) + "x" +
                                  std::to_string(g.ncols));
  GridGeometry out_g;
  out_g.nrows = g.nrows / 2;
  out_g.ncols = g.ncols / 2;
  out_g.dlat = 2.0 * g.dlat;
  out_g.dlon = 2.0 * g.dlon;
  // New centers sit halfway between the two source centers of each block.
  out_g.lat0 = g.lat0 - 0.5 * g.dlat;
  out_g.lon0 = g.lon0 + 0.5 * g.dlon;
  RasterField out(out_g, field.timestamp(), field.kind(), 0.0);
  for (std::size_t r = 0; r < out_g.nrows; ++r) {
    for (std::size_t c = 0; c < out_g.ncols; ++c) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t dr = 0; dr < 2; ++dr) {
        for (std::size_t dc = 0; dc < 2; ++dc) {
          const std::size_t rr = 2 * r + dr, cc = 2 * c + dc;
          if (field.valid(rr, cc)) {
            sum += field(rr, cc);
            ++n;
          }
        }
      }
      out.set(r, c, n ? sum / double(n) : kNaN);
    }
  }
  return out;
}

}  // namespace rampcast::ingest
