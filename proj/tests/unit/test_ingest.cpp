#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles/oracles.hpp"
#include "rampcast/ingest.hpp"
#include "support/testing.hpp"

namespace rampcast::ingest {
namespace {

using rampcast::test::at;
using rampcast::test::TempDir;

GridGeometry grid4() { return {47.0, 7.0, 0.1, 0.1, 4, 4}; }

std::vector<RasterField> frames(int n, Instant t0, double step_minutes = 15) {
  std::vector<RasterField> out;
  for (int k = 0; k < n; ++k) {
    std::vector<double> v(16);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 100.0 * k + double(i);
    out.emplace_back(grid4(), t0 + std::chrono::minutes{int(step_minutes * k)}, FieldKind::SSI, std::move(v));
  }
  return out;
}

TEST(Archive, LoadsEightFramesAtFifteenMinutes) {
  TempDir dir("arch");
  const auto fs = frames(8, at("2021-06-01T08:00:00Z"));
  write_field_archive(dir.path(), fs);
  const auto seq = load_field_archive(dir.path());
  ASSERT_EQ(seq.size(), 8u);
  EXPECT_EQ(seq.cadence(), std::chrono::minutes{15});
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(seq[k].timestamp(), fs[k].timestamp());
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(seq[k].value(i), fs[k].value(i));
  }
}

TEST(Archive, GapNamesMissingSlot) {
  TempDir dir("gap");
  write_field_archive(dir.path(), frames(2, at("2021-06-01T08:00:00Z"), 30));
  try {
    load_field_archive(dir.path());
    FAIL() << "gap not detected";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingFrame);
    EXPECT_NE(std::string(e.what()).find("2021-06-01T08:15:00Z"), std::string::npos) << e.what();
  }
}

TEST(Archive, CorruptFrameDetected) {
  TempDir dir("corrupt");
  const auto fs = frames(2, at("2021-06-01T08:00:00Z"));
  write_field_archive(dir.path(), fs);
  {
    std::fstream f(frame_path(dir.path(), fs[1].timestamp()), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(5);
    f.put('\x7f');
  }
  EXPECT_RAMPCAST_ERROR(load_field_archive(dir.path()), Errc::CorruptFrame);
  std::filesystem::resize_file(frame_path(dir.path(), fs[1].timestamp()), 10);
  EXPECT_RAMPCAST_ERROR(load_field_archive(dir.path()), Errc::CorruptFrame);
}

TEST(Archive, MismatchedGeometryRejected) {
  TempDir dir("geom");
  write_field_archive(dir.path(), frames(1, at("2021-06-01T08:00:00Z")));
  RasterField other({47.0, 7.0, 0.1, 0.1, 2, 2}, at("2021-06-01T08:15:00Z"), FieldKind::SSI, 1.0);
  EXPECT_RAMPCAST_ERROR(write_field_archive(dir.path(), std::span(&other, 1)), Errc::GeometryMismatch);
}

TEST(Archive, CropTwoByTwoMatchesHandIndex) {
  TempDir dir("crop");
  const auto fs = frames(1, at("2021-06-01T08:00:00Z"));
  write_field_archive(dir.path(), fs);
  // Centers: rows at lat 47.0, 46.9, 46.8, 46.7; cols at lon 7.0 .. 7.3.
  const BoundingBox box{46.75, 46.95, 7.05, 7.25};
  const auto seq = load_field_archive(dir.path(), box);
  const auto& f = seq[0];
  ASSERT_EQ(f.rows(), 2u);
  ASSERT_EQ(f.cols(), 2u);
  EXPECT_NEAR(f.geometry().lat0, 46.9, 1e-12);
  EXPECT_NEAR(f.geometry().lon0, 7.1, 1e-12);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(f(r, c), fs[0]((r + 1), (c + 1)));
}

TEST(Archive, EncodeDecodeKeepsMask) {
  RasterField f(grid4(), at("2021-06-01T08:00:00Z"), FieldKind::CSI, 0.5);
  f.invalidate(3);
  const auto bytes = encode_frame(f);
  EXPECT_EQ(bytes.size(), 16u * 4u);
  const auto g = decode_frame(bytes, grid4(), f.timestamp(), FieldKind::CSI);
  EXPECT_FALSE(g.valid(3));
  EXPECT_EQ(g.valid_count(), 15u);
  EXPECT_EQ(g.value(0), 0.5);
}

TEST(Downsample, ConstantStaysConstant) {
  const RasterField f(grid4(), Instant{}, FieldKind::CSI, 0.7);
  const auto d = downsample_2x2(f);
  ASSERT_EQ(d.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(d.value(i), 0.7);
  EXPECT_NEAR(d.geometry().lat0, 46.95, 1e-12);
  EXPECT_NEAR(d.geometry().dlat, 0.2, 1e-12);
}

TEST(Downsample, BlockMean) {
  const GridGeometry g{0, 0, 1, 1, 2, 2};
  const RasterField f(g, Instant{}, FieldKind::CSI, {1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(downsample_2x2(f).value(0), 2.5);
}

TEST(Downsample, ValidOnlyMeanOverAllMaskPatterns) {
  const GridGeometry g{0, 0, 1, 1, 2, 2};
  const std::vector<double> base = {0.1, 0.7, 1.3, 0.4};
  for (unsigned pattern = 0; pattern < 16; ++pattern) {
    std::vector<double> v = base;
    std::vector<std::uint8_t> m(4);
    double sum = 0;
    int n = 0;
    for (int i = 0; i < 4; ++i) {
      m[std::size_t(i)] = (pattern >> i) & 1u;
      if (m[std::size_t(i)]) {
        sum += base[std::size_t(i)];
        ++n;
      }
    }
    const auto d = downsample_2x2(RasterField(g, Instant{}, FieldKind::CSI, v, m));
    if (n == 0) {
      EXPECT_FALSE(d.valid(0)) << pattern;
    } else {
      ASSERT_TRUE(d.valid(0)) << pattern;
      EXPECT_DOUBLE_EQ(d.value(0), sum / n) << pattern;
    }
  }
}

TEST(Downsample, OddDimensionsRejected) {
  const RasterField f({0, 0, 1, 1, 3, 4}, Instant{}, FieldKind::CSI, 1.0);
  EXPECT_RAMPCAST_ERROR(downsample_2x2(f), Errc::OddDimensions);
}

const char* kHeader = "station_id,lat,lon,elevation_m,timestamp_utc,power_kw\n";

TEST(Stations, TwoStationsFourRows) {
  std::stringstream in;
  in << kHeader;
  for (const char* id : {"A", "B"})
    for (int k = 0; k < 4; ++k)
      in << id << ",47.0,7.0,500," << format_iso8601(at("2021-06-01T10:00:00Z") + kStep * k) << ',' << 100 * k << '\n';
  const auto load = parse_station_csv(in);
  ASSERT_EQ(load.stations.size(), 2u);
  EXPECT_EQ(load.stations[0].size(), 4u);
  EXPECT_EQ(load.stations[1].size(), 4u);
  EXPECT_EQ(load.summary.rows, 8u);
}

TEST(Stations, NegativePowerMaskedAndCounted) {
  std::stringstream in;
  in << kHeader << "A,47,7,500,2021-06-01T10:00:00Z,10\nA,47,7,500,2021-06-01T10:15:00Z,-5\n";
  const auto load = parse_station_csv(in);
  EXPECT_EQ(load.summary.negative_power, 1u);
  EXPECT_EQ(load.stations[0].quality[1], 0);
  EXPECT_EQ(load.stations[0].valid_count(), 1u);
}

TEST(Stations, InterleavedEqualsSorted) {
  std::mt19937_64 rng(3);
  std::vector<std::string> rows;
  for (const char* id : {"S1", "S2", "S3"})
    for (int k = 0; k < 12; ++k)
      rows.push_back(std::string(id) + ",46.5,8.1,700," + format_iso8601(at("2021-06-01T06:00:00Z") + kStep * k) +
                     "," + std::to_string(37 * k % 11));
  std::stringstream sorted, shuffled;
  sorted << kHeader;
  for (const auto& r : rows) sorted << r << '\n';
  std::shuffle(rows.begin(), rows.end(), rng);
  shuffled << kHeader;
  for (const auto& r : rows) shuffled << r << '\n';
  const auto a = parse_station_csv(sorted), b = parse_station_csv(shuffled);
  ASSERT_EQ(a.stations.size(), b.stations.size());
  for (std::size_t s = 0; s < a.stations.size(); ++s) {
    EXPECT_EQ(a.stations[s].meta.id, b.stations[s].meta.id);
    EXPECT_EQ(a.stations[s].timestamps, b.stations[s].timestamps);
    EXPECT_EQ(a.stations[s].power_kw, b.stations[s].power_kw);
  }
}

TEST(Stations, DuplicateAndOffCadenceRejected) {
  std::stringstream dup;
  dup << kHeader << "A,47,7,500,2021-06-01T10:00:00Z,10\nA,47,7,500,2021-06-01T10:00:00Z,11\n";
  EXPECT_RAMPCAST_ERROR(parse_station_csv(dup), Errc::DuplicateTimestamp);
  std::stringstream off;
  off << kHeader << "A,47,7,500,2021-06-01T10:07:00Z,10\n";
  EXPECT_RAMPCAST_ERROR(parse_station_csv(off), Errc::CadenceMismatch);
  std::stringstream bad;
  bad << "id,power\n";
  EXPECT_RAMPCAST_ERROR(parse_station_csv(bad), Errc::ParseError);
}

TEST(Stations, GapSlotsAreMasked) {
  std::stringstream in;
  in << kHeader << "A,47,7,500,2021-06-01T10:00:00Z,10\nA,47,7,500,2021-06-01T10:45:00Z,11\n";
  const auto load = parse_station_csv(in);
  const auto& s = load.stations[0];
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.valid_count(), 2u);
  EXPECT_FALSE(s.power_at(at("2021-06-01T10:15:00Z")).has_value());
  EXPECT_EQ(*s.power_at(at("2021-06-01T10:45:00Z")), 11.0);
}

StationSeries series_of(const std::vector<double>& v) {
  StationSeries s;
  s.meta = {"X", 47, 7, 400};
  for (std::size_t i = 0; i < v.size(); ++i) {
    s.timestamps.push_back(at("2021-06-01T00:00:00Z") + kStep * int(i));
    s.power_kw.push_back(v[i]);
    s.quality.push_back(std::isfinite(v[i]) ? 1 : 0);
  }
  return s;
}

TEST(P95, ConstantSeries) {
  auto s = series_of(std::vector<double>(40, 12.5));
  EXPECT_EQ(compute_p95(s), 12.5);
  EXPECT_EQ(*s.p95_kw, 12.5);
}

TEST(P95, OneToHundred) {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[std::size_t(i)] = i + 1;
  std::shuffle(v.begin(), v.end(), std::mt19937_64(2));
  EXPECT_EQ(compute_p95(series_of(v)), 95.0);
  EXPECT_EQ(oracle::sorted_rank(v, 95), 95.0);
}

TEST(P95, MaskedOutlierExcluded) {
  std::vector<double> v(60, 1.0);
  auto s = series_of(v);
  s.power_kw[10] = 1e6;
  s.quality[10] = 0;
  EXPECT_EQ(compute_p95(s), 1.0);
}

TEST(P95, MatchesSortOracleOnRandomSeries) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 5000);
  std::uniform_int_distribution<int> len(20, 400);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(std::size_t(len(rng)));
    for (auto& x : v) x = std::round(u(rng));
    ASSERT_EQ(compute_p95(series_of(v)), oracle::sorted_rank(v, 95.0));
  }
}

TEST(P95, TooFewSamples) { EXPECT_RAMPCAST_ERROR(compute_p95(series_of(std::vector<double>(5, 1))), Errc::InsufficientData); }

TEST(P95, CacheRoundTrip) {
  TempDir dir("p95");
  std::vector<StationSeries> st = {series_of(std::vector<double>(30, 2.0))};
  compute_p95(st[0]);
  write_p95_cache(dir / "p95.csv", st);
  const auto back = read_p95_cache(dir / "p95.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].station_id, "X");
  EXPECT_EQ(back[0].p95_kw, 2.0);
}

}  // namespace
}  // namespace rampcast::ingest
