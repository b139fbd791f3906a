#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rampcast/parallel.hpp"
#include "rampcast/text.hpp"
#include "rampcast/time.hpp"
#include "support/testing.hpp"

namespace rampcast {
namespace {

TEST(Time, IsoRoundTrip) {
  const Instant t = parse_iso8601("2020-06-21T11:45:00Z");
  EXPECT_EQ(format_iso8601(t), "2020-06-21T11:45:00Z");
  EXPECT_EQ(parse_iso8601("2020-06-21 11:45"), t);
  EXPECT_EQ(utc_hours(t), 11.75);
  EXPECT_EQ(day_of_year(t), 173);
  EXPECT_EQ(utc_month(t), 6);
  EXPECT_TRUE(on_cadence(t));
  EXPECT_FALSE(on_cadence(t + std::chrono::minutes{5}));
}

TEST(Time, RejectsGarbage) {
  EXPECT_RAMPCAST_ERROR(parse_iso8601("21/06/2020 11:45"), Errc::ParseError);
  EXPECT_RAMPCAST_ERROR(parse_date("2020-13-01"), Errc::ParseError);
}

TEST(Time, RandomInstantsRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> secs(0, 60L * 365 * 86400);
  for (int i = 0; i < 1000; ++i) {
    const Instant t{std::chrono::seconds{secs(rng)}};
    ASSERT_EQ(parse_iso8601(format_iso8601(t)), t);
    ASSERT_EQ(midnight(civil_date(t)) <= t, true);
  }
}

TEST(Text, NumbersRoundTripAndMissing) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng);
    ASSERT_EQ(parse_number(format_number(v), "v"), v);
  }
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "");
  EXPECT_TRUE(std::isnan(parse_number("", "v")));
  EXPECT_TRUE(std::isnan(parse_number("NA", "v")));
  EXPECT_RAMPCAST_ERROR(parse_number("12x", "v"), Errc::ParseError);
}

TEST(Text, SkipsMetadataLines) {
  std::istringstream in("# meta\nheader\n# more\nrow\n");
  std::string line;
  ASSERT_TRUE(next_data_line(in, line));
  EXPECT_EQ(line, "header");
  ASSERT_TRUE(next_data_line(in, line));
  EXPECT_EQ(line, "row");
  EXPECT_FALSE(next_data_line(in, line));
}

TEST(Parallel, EveryIndexOnceAndExceptionsPropagate) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, 4);
  for (int h : hits) ASSERT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
    if (i == 7) fail(Errc::IoError, "boom");
  }, 3), Error);
}

TEST(Parallel, CompensatedSumIsOrderInsensitive) {
  std::vector<double> v = {1e16, 1.0, -1e16, 3.0, 1e-3};
  CompensatedSum a;
  for (double x : v) a += x;
  CompensatedSum b;
  for (auto it = v.rbegin(); it != v.rend(); ++it) b += *it;
  EXPECT_DOUBLE_EQ(a.value(), 4.001);
  EXPECT_DOUBLE_EQ(b.value(), 4.001);
}

TEST(Parallel, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(1, 1), mix_seed(1, 2));
  EXPECT_NE(mix_seed(1, 0, 1), mix_seed(1, 1, 0));
  EXPECT_EQ(mix_seed(9, 3, 4), mix_seed(9, 3, 4));
}

}  // namespace
}  // namespace rampcast
