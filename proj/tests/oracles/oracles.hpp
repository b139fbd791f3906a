#pragma once
// Independent reference computations used only by tests. Nothing here calls into the
// library's implementation of the quantity being checked.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include "rampcast/ingest.hpp"
#include "rampcast/time.hpp"

namespace rampcast::oracle {

inline constexpr double kRad = std::numbers::pi / 180.0;

// --- sun ------------------------------------------------------------------------

struct SunAngles {
  double zenith_deg;
  double azimuth_deg;
};

/// Blanco-Muriel et al. (2001) "PSA" algorithm, valid 1999-2015 to about 0.01 deg and
/// usable a few decades either side at somewhat lower accuracy.
inline SunAngles psa_sun(double lat, double lon, Instant t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const double hours = std::chrono::duration<double>(t - day).count() / 3600.0;
  const long year = int(ymd.year()), month = unsigned(ymd.month()), dom = unsigned(ymd.day());
  const long a1 = (month - 14) / 12;
  const long a2 = (1461 * (year + 4800 + a1)) / 4 + (367 * (month - 2 - 12 * a1)) / 12 -
                  (3 * ((year + 4900 + a1) / 100)) / 4 + dom - 32075;
  const double jd = double(a2) - 0.5 + hours / 24.0;
  const double n = jd - 2451545.0;

  const double omega = 2.1429 - 0.0010394594 * n;
  const double mean_lon = 4.8950630 + 0.017202791698 * n;
  const double mean_anom = 6.2400600 + 0.0172019699 * n;
  const double ecl_lon = mean_lon + 0.03341607 * std::sin(mean_anom) + 0.00034894 * std::sin(2 * mean_anom) -
                         0.0001134 - 0.0000203 * std::sin(omega);
  const double obliquity = 0.4090928 - 6.2140e-9 * n + 0.0000396 * std::cos(omega);
  double ra = std::atan2(std::cos(obliquity) * std::sin(ecl_lon), std::cos(ecl_lon));
  if (ra < 0) ra += 2 * std::numbers::pi;
  const double decl = std::asin(std::sin(obliquity) * std::sin(ecl_lon));

  const double gmst = 6.6974243242 + 0.0657098283 * n + hours;
  const double lmst = (gmst * 15.0 + lon) * kRad;
  const double ha = lmst - ra;
  const double phi = lat * kRad;
  double zen = std::acos(std::cos(phi) * std::cos(ha) * std::cos(decl) + std::sin(decl) * std::sin(phi));
  double az = std::atan2(-std::sin(ha), std::tan(decl) * std::cos(phi) - std::sin(phi) * std::cos(ha));
  if (az < 0) az += 2 * std::numbers::pi;
  zen += 6371.01 / 149597890.0 * std::sin(zen);  // parallax
  return {zen / kRad, az / kRad};
}

/// Cooper (1969) declination in degrees for day of year n.
inline double cooper_declination(int doy) { return 23.45 * std::sin(2 * std::numbers::pi * (284.0 + doy) / 365.0); }

/// Day length in hours from the sunrise hour-angle equation at zenith 90.833 deg.
inline double hour_angle_day_length(double lat, int doy) {
  const double d = cooper_declination(doy) * kRad, phi = lat * kRad;
  const double c = (std::cos(90.833 * kRad) - std::sin(phi) * std::sin(d)) / (std::cos(phi) * std::cos(d));
  return 2.0 * std::acos(std::clamp(c, -1.0, 1.0)) / kRad / 15.0;
}

// --- CRPS -----------------------------------------------------------------------

/// Integral of (F_ens(x) - H(x - y))^2 dx. F_ens is a step function, so the integrand is
/// piecewise constant between consecutive breakpoints; each piece is integrated exactly.
inline double crps_integral(std::span<const double> members, double obs) {
  std::vector<double> pts(members.begin(), members.end());
  pts.push_back(obs);
  std::sort(pts.begin(), pts.end());
  const double e = double(members.size());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double lo = pts[k], hi = pts[k + 1];
    if (!(hi > lo)) continue;
    const double mid = 0.5 * (lo + hi);
    double f = 0.0;
    for (double m : members) f += m <= mid ? 1.0 : 0.0;
    f /= e;
    const double h = mid >= obs ? 1.0 : 0.0;
    total += (f - h) * (f - h) * (hi - lo);
  }
  return total;
}

/// Same integral by midpoint quadrature on a uniform grid (slow, for small examples).
inline double crps_quadrature(std::span<const double> members, double obs, std::size_t steps = 2000000) {
  double lo = obs, hi = obs;
  for (double m : members) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  lo -= 1.0;
  hi += 1.0;
  const double dx = (hi - lo) / double(steps);
  double total = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = lo + (double(i) + 0.5) * dx;
    double f = 0.0;
    for (double m : members) f += m <= x ? 1.0 : 0.0;
    f /= double(members.size());
    const double h = x >= obs ? 1.0 : 0.0;
    total += (f - h) * (f - h) * dx;
  }
  return total;
}

// --- percentiles and thresholds -----------------------------------------------

/// Nearest-rank by explicit sort and index.
inline double sorted_rank(std::vector<double> v, double percent) {
  std::sort(v.begin(), v.end());
  std::size_t rank = std::size_t(std::ceil(percent / 100.0 * double(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

/// National aggregate in MW by plain per-timestamp summation over every station row.
/// Sums in kW first: quantized station values add exactly, leaving one rounding in the
/// conversion.
inline std::map<Instant, double> brute_aggregate(std::span<const ingest::StationSeries> stations) {
  std::map<Instant, double> sum;
  for (const auto& s : stations)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.quality[i]) sum[s.timestamps[i]] += s.power_kw[i];
      else sum.try_emplace(s.timestamps[i], 0.0);
  for (auto& [t, v] : sum) v /= 1000.0;
  return sum;
}

/// Max |P(t+15) - P(t)| over all consecutive pairs whose first instant lies on one of `days`.
inline double brute_threshold(const std::map<Instant, double>& agg, const std::vector<CivilDate>& days) {
  double best = 0.0;
  for (auto it = agg.begin(); it != agg.end(); ++it) {
    const auto next = std::next(it);
    if (next == agg.end()) break;
    if (next->first - it->first != kStep) continue;
    if (std::find(days.begin(), days.end(), civil_date(it->first)) == days.end()) continue;
    best = std::max(best, std::fabs(next->second - it->second));
  }
  return best;
}

// --- time series ---------------------------------------------------------------

/// Sample lag-k autocorrelation of one series about its own mean.
inline double autocorrelation(std::span<const double> x, std::size_t lag) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    if (i + lag < x.size()) num += (x[i] - mean) * (x[i + lag] - mean);
  }
  return num / den;
}

// --- spectra -------------------------------------------------------------------

/// Radially binned periodogram by a direct O(N^2) DFT over the full spectrum. Bin b holds
/// the mean |X|^2 over frequencies whose radial wavenumber rounds to b.
inline std::vector<double> naive_radial_power(std::span<const double> v, std::size_t rows, std::size_t cols) {
  const double l = double(std::max(rows, cols));
  std::vector<double> sum, count;
  for (std::size_t p = 0; p < rows; ++p)
    for (std::size_t q = 0; q < cols; ++q) {
      double re = 0.0, im = 0.0;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          const double a = -2.0 * std::numbers::pi * (double(p * r) / double(rows) + double(q * c) / double(cols));
          re += v[r * cols + c] * std::cos(a);
          im += v[r * cols + c] * std::sin(a);
        }
      const double fy = p <= rows / 2 ? double(p) : double(p) - double(rows);
      const double fx = q <= cols / 2 ? double(q) : double(q) - double(cols);
      const double k = std::hypot(fy * l / double(rows), fx * l / double(cols));
      const std::size_t b = std::size_t(std::lround(k));
      if (b >= sum.size()) {
        sum.resize(b + 1, 0.0);
        count.resize(b + 1, 0.0);
      }
      sum[b] += re * re + im * im;
      count[b] += 1.0;
    }
  for (std::size_t b = 0; b < sum.size(); ++b) sum[b] = count[b] > 0 ? sum[b] / count[b] : 0.0;
  return sum;
}

}  // namespace rampcast::oracle
