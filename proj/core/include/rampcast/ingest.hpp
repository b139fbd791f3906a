#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rampcast/time.hpp"

namespace rampcast::ingest {

/// Regular lat/lon grid. Row 0 is the northernmost row; rows run north to south and
/// columns west to east. lat0/lon0 are the center of cell (0, 0).
struct GridGeometry {
  double lat0 = 0.0;
  double lon0 = 0.0;
  double dlat = 0.0;
  double dlon = 0.0;
  std::size_t nrows = 0;
  std::size_t ncols = 0;

  void validate() const;
  std::size_t size() const noexcept { return nrows * ncols; }
  double lat(std::size_t row) const noexcept { return lat0 - double(row) * dlat; }
  double lon(std::size_t col) const noexcept { return lon0 + double(col) * dlon; }
  bool operator==(const GridGeometry&) const = default;
};

enum class FieldKind { SSI, CSI };

std::string to_string(FieldKind kind);
FieldKind parse_field_kind(const std::string& text);

/// One timestamped gridded field. Masked cells always hold NaN; NaN values are always
/// masked. Statistics only ever see valid cells.
class RasterField {
 public:
  RasterField() = default;
  /// All cells valid with value `fill`.
  RasterField(const GridGeometry& geometry, Instant t, FieldKind kind, double fill = 0.0);
  /// Cells with mask 0 or non-finite values become masked.
  RasterField(const GridGeometry& geometry, Instant t, FieldKind kind, std::vector<double> values,
              std::vector<std::uint8_t> mask);
  /// Mask derived from NaN values.
  RasterField(const GridGeometry& geometry, Instant t, FieldKind kind, std::vector<double> values);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  Instant timestamp() const noexcept { return timestamp_; }
  FieldKind kind() const noexcept { return kind_; }
  std::size_t rows() const noexcept { return geometry_.nrows; }
  std::size_t cols() const noexcept { return geometry_.ncols; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols() + c]; }
  double value(std::size_t idx) const noexcept { return values_[idx]; }
  bool valid(std::size_t r, std::size_t c) const noexcept { return mask_[r * cols() + c] != 0; }
  bool valid(std::size_t idx) const noexcept { return mask_[idx] != 0; }

  /// Non-finite v masks the cell.
  void set(std::size_t r, std::size_t c, double v) noexcept;
  void set(std::size_t idx, double v) noexcept;
  void invalidate(std::size_t idx) noexcept;

  void set_timestamp(Instant t) noexcept { timestamp_ = t; }
  void set_kind(FieldKind kind) noexcept { kind_ = kind; }

  std::size_t valid_count() const noexcept;
  /// NaN when no cell is valid.
  double valid_mean() const noexcept;
  /// Copy of the values with masked cells replaced by the valid mean (0 when none).
  std::vector<double> filled_values() const;

 private:
  GridGeometry geometry_{};
  Instant timestamp_{};
  FieldKind kind_ = FieldKind::CSI;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Contiguous 15-minute sequence of fields sharing one geometry and kind.
class FieldSequence {
 public:
  FieldSequence() = default;
  /// Throws GeometryMismatch, MissingFrame (gap), InvalidArgument (kind/order).
  explicit FieldSequence(std::vector<RasterField> fields);

  const std::vector<RasterField>& fields() const noexcept { return fields_; }
  std::size_t size() const noexcept { return fields_.size(); }
  bool empty() const noexcept { return fields_.empty(); }
  const RasterField& operator[](std::size_t i) const { return fields_[i]; }
  const RasterField& back() const { return fields_.back(); }
  const GridGeometry& geometry() const { return fields_.front().geometry(); }
  FieldKind kind() const { return fields_.front().kind(); }
  std::chrono::minutes cadence() const noexcept { return kStep; }

  /// Last n fields as a new sequence.
  FieldSequence tail(std::size_t n) const;

 private:
  std::vector<RasterField> fields_;
};

struct BoundingBox {
  double lat_min = -90.0;
  double lat_max = 90.0;
  double lon_min = -180.0;
  double lon_max = 180.0;
};

struct TimeRange {
  Instant begin;
  Instant end;  // inclusive
};

/// Keeps cells whose centers lie inside the box (edges inclusive).
RasterField crop(const RasterField& field, const BoundingBox& box);

/// Mean of the valid cells of each 2x2 block; a block with no valid cell stays masked.
RasterField downsample_2x2(const RasterField& field);

// --- raster archive -------------------------------------------------------

struct ArchiveManifest {
  GridGeometry geometry;
  FieldKind kind = FieldKind::SSI;
  int cadence_minutes = 15;
  std::vector<Instant> frames;
  std::vector<std::uint32_t> crc32;  // parallel to frames; empty when not recorded
};

std::filesystem::path frame_path(const std::filesystem::path& root, Instant t);
ArchiveManifest read_manifest(const std::filesystem::path& root);

/// Loads `<root>/manifest.json` + `<root>/frames/<ISO8601>.f32`, optionally restricted to a
/// time range and cropped to a box. Gaps inside the requested range raise MissingFrame.
FieldSequence load_field_archive(const std::filesystem::path& root,
                                 const std::optional<BoundingBox>& bbox = std::nullopt,
                                 const std::optional<TimeRange>& range = std::nullopt);

/// Writes fields (need not be contiguous across days) plus manifest with per-frame crc32.
/// An existing manifest at root is merged: new frames replace same-time frames.
void write_field_archive(const std::filesystem::path& root, std::span<const RasterField> fields);

/// zlib crc32 of an encoded frame, as recorded in manifests.
std::uint32_t frame_crc32(std::span<const std::uint8_t> bytes);

/// Raw little-endian float32 frame encoding (NaN for masked cells).
std::vector<std::uint8_t> encode_frame(const RasterField& field);
RasterField decode_frame(std::span<const std::uint8_t> bytes, const GridGeometry& geometry, Instant t,
                         FieldKind kind);

// --- stations -------------------------------------------------------------

struct StationMeta {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  double elevation_m = 0.0;
  void validate() const;
};

/// Regular 15-minute power series in kW. Missing slots and rejected rows are masked.
struct StationSeries {
  StationMeta meta;
  std::vector<Instant> timestamps;
  std::vector<double> power_kw;
  std::vector<std::uint8_t> quality;  // 1 = valid
  std::optional<double> p95_kw;

  std::size_t size() const noexcept { return timestamps.size(); }
  std::size_t valid_count() const noexcept;
  /// Index of t, or nullopt when outside the series or off-cadence.
  std::optional<std::size_t> index_of(Instant t) const noexcept;
  /// Power at t when present and valid.
  std::optional<double> power_at(Instant t) const noexcept;
};

struct StationLoadSummary {
  std::size_t rows = 0;
  std::size_t stations = 0;
  std::size_t negative_power = 0;
  std::size_t missing_power = 0;
  std::size_t gap_slots = 0;
};

struct StationLoad {
  std::vector<StationSeries> stations;  // sorted by id
  StationLoadSummary summary;
};

/// CSV `station_id,lat,lon,elevation_m,timestamp_utc,power_kw`. Rows may be interleaved.
/// Negative or empty power is masked and counted; a repeated (station, timestamp) raises
/// DuplicateTimestamp; off-cadence timestamps raise CadenceMismatch.
StationLoad load_station_series(const std::filesystem::path& path);
StationLoad parse_station_csv(std::istream& in);
void write_station_csv(const std::filesystem::path& path, std::span<const StationSeries> stations);
void write_station_csv(std::ostream& out, std::span<const StationSeries> stations);

/// Nearest-rank percentile: the ceil(p/100 * n)-th order statistic (1-based, clamped to [1, n]).
double nearest_rank_percentile(std::vector<double> values, double percent);

/// 95th nearest-rank percentile of the valid samples; stored on the series.
/// Needs >= 20 valid samples (InsufficientData).
double compute_p95(StationSeries& series);
double compute_p95(const StationSeries& series);

struct P95Entry {
  std::string station_id;
  double p95_kw = 0.0;
};
void write_p95_cache(const std::filesystem::path& path, std::span<const StationSeries> stations);
void write_p95_cache(std::ostream& out, std::span<const StationSeries> stations);
std::vector<P95Entry> read_p95_cache(const std::filesystem::path& path);

}  // namespace rampcast::ingest
