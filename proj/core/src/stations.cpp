#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rampcast/error.hpp"
#include "rampcast/ingest.hpp"
#include "rampcast/text.hpp"

namespace rampcast::ingest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kStationHeader = "station_id,lat,lon,elevation_m,timestamp_utc,power_kw";

double parse_double(std::string_view s, std::size_t line_no) {
  return parse_number(s, "line " + std::to_string(line_no));
}

std::string format_double(double v) { return format_number(v); }

struct PendingStation {
  StationMeta meta;
  std::map<Instant, double> samples;  // NaN = masked
};

}  // namespace

void StationMeta::validate() const {
  if (id.empty()) fail(Errc::InvalidArgument, "station id must not be empty");
  if (!(lat >= -90.0 && lat <= 90.0)) fail(Errc::InvalidArgument, "station " + id + ": latitude out of range");
  if (!(lon >= -180.0 && lon <= 180.0)) fail(Errc::InvalidArgument, "station " + id + ": longitude out of range");
}

std::size_t StationSeries::valid_count() const noexcept {
  return std::size_t(std::count(quality.begin(), quality.end(), std::uint8_t{1}));
}

std::optional<std::size_t> StationSeries::index_of(Instant t) const noexcept {
  if (timestamps.empty() || t < timestamps.front() || t > timestamps.back()) return std::nullopt;
  const auto offset = t - timestamps.front();
  if (offset % kStep != std::chrono::seconds{0}) return std::nullopt;
  return std::size_t(offset / kStep);
}

std::optional<double> StationSeries::power_at(Instant t) const noexcept {
  const auto idx = index_of(t);
  if (!idx || !quality[*idx]) return std::nullopt;
  return power_kw[*idx];
}

StationLoad parse_station_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_data_line(in, line)) fail(Errc::ParseError, "empty station file");
  ++line_no;
  if (trim(line) != kStationHeader) fail(Errc::ParseError, "unexpected station header: " + line);

  StationLoad load;
  std::map<std::string, PendingStation> pending;
  while (next_data_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 6)
      fail(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 6 columns");
    ++load.summary.rows;
    const std::string id(trim(cols[0]));
    auto& st = pending[id];
    if (st.meta.id.empty()) {
      st.meta.id = id;
      st.meta.lat = parse_double(cols[1], line_no);
      st.meta.lon = parse_double(cols[2], line_no);
      st.meta.elevation_m = parse_double(cols[3], line_no);
      st.meta.validate();
    }
    const Instant t = parse_iso8601(trim(cols[4]));
    if (!on_cadence(t))
      fail(Errc::CadenceMismatch, "line " + std::to_string(line_no) + ": timestamp off the 15-minute grid");
    double p = parse_double(cols[5], line_no);
    if (std::isnan(p)) {
      ++load.summary.missing_power;
    } else if (p < 0.0) {
      ++load.summary.negative_power;
      p = kNaN;
    }
    if (!st.samples.emplace(t, p).second)
      fail(Errc::DuplicateTimestamp, "station " + id + " repeats " + format_iso8601(t));
  }

  for (auto& [id, st] : pending) {
    StationSeries s;
    s.meta = st.meta;
    const Instant first = st.samples.begin()->first;
    const Instant last = st.samples.rbegin()->first;
    for (Instant t = first; t <= last; t += kStep) {
      s.timestamps.push_back(t);
      const auto it = st.samples.find(t);
      if (it == st.samples.end()) {
        ++load.summary.gap_slots;
        s.power_kw.push_back(kNaN);
        s.quality.push_back(0);
      } else {
        s.power_kw.push_back(it->second);
        s.quality.push_back(std::isnan(it->second) ? 0 : 1);
      }
    }
    load.stations.push_back(std::move(s));
  }
  load.summary.stations = load.stations.size();
  return load;
}

StationLoad load_station_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingInput, "cannot open station file " + path.string());
  return parse_station_csv(in);
}

void write_station_csv(const std::filesystem::path& path, std::span<const StationSeries> stations) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  write_station_csv(out, stations);
}

void write_station_csv(std::ostream& out, std::span<const StationSeries> stations) {
  out << kStationHeader << '\n';
  for (const auto& s : stations) {
    const std::string prefix = s.meta.id + ',' + format_double(s.meta.lat) + ',' + format_double(s.meta.lon) +
                               ',' + format_double(s.meta.elevation_m) + ',';
    for (std::size_t i = 0; i < s.size(); ++i)
      out << prefix << format_iso8601(s.timestamps[i]) << ',' << (s.quality[i] ? format_double(s.power_kw[i]) : "")
          << '\n';
  }
}

double nearest_rank_percentile(std::vector<double> values, double percent) {
  if (values.empty()) fail(Errc::InsufficientData, "percentile of an empty sample");
  if (!(percent >= 0.0 && percent <= 100.0)) fail(Errc::InvalidArgument, "percentile outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double n = double(values.size());
  const double exact = percent / 100.0 * n;
  // Guard against representation noise such as 0.95 * 100 = 95.00000000000001.
  auto rank = std::size_t(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

double compute_p95(const StationSeries& series) {
  std::vector<double> valid;
  valid.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.quality[i]) valid.push_back(series.power_kw[i]);
  if (valid.size() < 20)
    fail(Errc::InsufficientData, "station " + series.meta.id + " has " + std::to_string(valid.size()) +
                                     " valid samples; P95 needs 20");
  return nearest_rank_percentile(std::move(valid), 95.0);
}

double compute_p95(StationSeries& series) {
  const double p = compute_p95(static_cast<const StationSeries&>(series));
  series.p95_kw = p;
  return p;
}

void write_p95_cache(const std::filesystem::path& path, std::span<const StationSeries> stations) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  write_p95_cache(out, stations);
}

void write_p95_cache(std::ostream& out, std::span<const StationSeries> stations) {
  out << "station_id,p95_kw\n";
  for (const auto& s : stations) {
    if (!s.p95_kw) fail(Errc::InvalidArgument, "station " + s.meta.id + " has no P95");
    out << s.meta.id << ',' << format_double(*s.p95_kw) << '\n';
  }
}

std::vector<P95Entry> read_p95_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingInput, "cannot open " + path.string());
  std::string line;
  next_data_line(in, line);
  if (trim(line) != "station_id,p95_kw") fail(Errc::ParseError, "unexpected P95 cache header");
  std::vector<P95Entry> out;
  std::size_t line_no = 1;
  while (next_data_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 2) fail(Errc::ParseError, "P95 cache line " + std::to_string(line_no));
    out.push_back({std::string(trim(cols[0])), parse_double(cols[1], line_no)});
  }
  return out;
}

}  // namespace rampcast::ingest
