#include <algorithm>
#include <cfenv>
#include <cmath>
#include <map>

#include "rampcast/error.hpp"
#include "rampcast/rampdetect.hpp"

namespace rampcast::ramp {

std::string to_string(Season s) {
  switch (s) {
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    case Season::SON: return "SON";
    case Season::DJF: return "DJF";
  }
  return "?";
}

Season season_of(Instant t) noexcept {
  const int m = utc_month(t);
  if (m >= 3 && m <= 5) return Season::MAM;
  if (m >= 6 && m <= 8) return Season::JJA;
  if (m >= 9 && m <= 11) return Season::SON;
  return Season::DJF;
}

std::size_t HexbinDensity::total() const noexcept {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

std::pair<double, double> hex_center(double x, double y) noexcept {
  // Lattice 1 at integer points, lattice 2 offset by half a cell in both directions;
  // the y distance is weighted by 3 so cells are hexagons rather than rectangles.
  const double ix1 = std::nearbyint(x), iy1 = std::nearbyint(y);
  const double ix2 = std::floor(x), iy2 = std::floor(y);
  const double d1 = (x - ix1) * (x - ix1) + 3.0 * (y - iy1) * (y - iy1);
  const double d2 = (x - ix2 - 0.5) * (x - ix2 - 0.5) + 3.0 * (y - iy2 - 0.5) * (y - iy2 - 0.5);
  if (d1 < d2) return {ix1, iy1};
  return {ix2 + 0.5, iy2 + 0.5};
}

std::array<HexbinDensity, 4> seasonal_hexbin(const AggregateSeries& agg, const RampThreshold& thr,
                                             ReferencePoint ref, const PairFilter& filter, const HexbinConfig& cfg) {
  if (!(thr.delta_p_tr_mw > 0.0)) fail(Errc::InvalidThreshold, "ramp threshold must be positive");
  if (!(cfg.x_width_hours > 0.0) || !(cfg.y_width > 0.0)) fail(Errc::InvalidArgument, "hexbin widths must be positive");
  const DaylightCalendar cal(ref);
  // Keys are doubled lattice coordinates so both sub-lattices map to integers.
  std::array<std::map<std::pair<long, long>, std::size_t>, 4> counts;
  for (std::size_t i = 0; i + 1 < agg.size(); ++i) {
    if (!pair_usable(agg, i, filter)) continue;
    const Instant t = agg.timestamps[i];
    if (!cal.daytime_pair(t)) continue;
    const double seconds = double((t - std::chrono::floor<std::chrono::days>(t)).count());
    const double x = seconds / (cfg.x_width_hours * 3600.0);
    const double y = std::fabs(agg.power_mw[i + 1] - agg.power_mw[i]) / thr.delta_p_tr_mw / cfg.y_width;
    const auto [cx, cy] = hex_center(x, y);
    counts[std::size_t(season_of(t))][{std::lround(2.0 * cx), std::lround(2.0 * cy)}]++;
  }

  std::array<HexbinDensity, 4> out;
  for (std::size_t s = 0; s < 4; ++s) {
    auto& d = out[s];
    d.season = Season(s);
    d.x_width_hours = cfg.x_width_hours;
    d.y_width = cfg.y_width;
    for (const auto& [key, n] : counts[s])
      d.bins.push_back({0.5 * double(key.first) * cfg.x_width_hours, 0.5 * double(key.second) * cfg.y_width, n});
    std::map<int, const HexBin*> best;
    for (const auto& b : d.bins) {
      const int hour = int(std::floor(b.x_center_hours + 1e-9));
      auto& cur = best[hour];
      if (!cur || b.count > cur->count || (b.count == cur->count && b.y_center < cur->y_center)) cur = &b;
    }
    for (const auto& [hour, b] : best) d.ridge.push_back({hour, b->y_center});
  }
  return out;
}

}  // namespace rampcast::ramp
