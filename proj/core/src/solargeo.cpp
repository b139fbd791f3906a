#include "rampcast/solargeo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rampcast/error.hpp"

namespace rampcast::solargeo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double rad(double deg) { return deg * kDeg; }
double deg(double rad) { return rad / kDeg; }

struct SunTerms {
  double declination;  // degrees
  double eot_minutes;
};

double julian_century(Instant t) {
  const double jd = double(t.time_since_epoch().count()) / 86400.0 + 2440587.5;
  return (jd - 2451545.0) / 36525.0;
}

SunTerms sun_terms(Instant t) {
  const double jc = julian_century(t);
  const double l0 = std::fmod(280.46646 + jc * (36000.76983 + jc * 0.0003032), 360.0);
  const double m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc);
  const double ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
  const double center = std::sin(rad(m)) * (1.914602 - jc * (0.004817 + 0.000014 * jc)) +
                        std::sin(rad(2 * m)) * (0.019993 - 0.000101 * jc) + std::sin(rad(3 * m)) * 0.000289;
  const double true_long = l0 + center;
  const double omega = 125.04 - 1934.136 * jc;
  const double app_long = true_long - 0.00569 - 0.00478 * std::sin(rad(omega));
  const double mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
  const double obliq = mean_obliq + 0.00256 * std::cos(rad(omega));
  const double decl = deg(std::asin(std::sin(rad(obliq)) * std::sin(rad(app_long))));
  const double y = std::pow(std::tan(rad(obliq / 2.0)), 2);
  const double eot = 4.0 * deg(y * std::sin(2 * rad(l0)) - 2 * ecc * std::sin(rad(m)) +
                               4 * ecc * y * std::sin(rad(m)) * std::cos(2 * rad(l0)) -
                               0.5 * y * y * std::sin(4 * rad(l0)) - 1.25 * ecc * ecc * std::sin(2 * rad(m)));
  return {decl, eot};
}

Instant add_minutes(Instant base, double minutes) {
  return base + std::chrono::seconds{std::llround(minutes * 60.0)};
}

}  // namespace

void ClearSkyParams::validate() const {
  for (double tl : linke_turbidity)
    if (!(tl >= 1.0)) fail(Errc::InvalidArgument, "Linke turbidity must be >= 1");
}

namespace {

SolarPosition position_from_terms(double lat, double lon, Instant t, const SunTerms& s) {
  const double minutes = utc_hours(t) * 60.0;
  double tst = std::fmod(minutes + s.eot_minutes + 4.0 * lon, 1440.0);
  if (tst < 0) tst += 1440.0;
  const double hour_angle = tst / 4.0 < 0 ? tst / 4.0 + 180.0 : tst / 4.0 - 180.0;
  const double cz = std::sin(rad(lat)) * std::sin(rad(s.declination)) +
                    std::cos(rad(lat)) * std::cos(rad(s.declination)) * std::cos(rad(hour_angle));
  const double zenith = deg(std::acos(std::clamp(cz, -1.0, 1.0)));

  const double denom = std::cos(rad(lat)) * std::sin(rad(zenith));
  double azimuth = 0.0;
  if (std::fabs(denom) > 1e-12) {
    const double arg = std::clamp((std::sin(rad(lat)) * std::cos(rad(zenith)) - std::sin(rad(s.declination))) / denom,
                                  -1.0, 1.0);
    const double a = deg(std::acos(arg));
    azimuth = hour_angle > 0 ? std::fmod(a + 180.0, 360.0) : std::fmod(540.0 - a, 360.0);
  }
  if (azimuth < 0) azimuth += 360.0;
  if (azimuth >= 360.0) azimuth -= 360.0;
  return {zenith, azimuth};
}

}  // namespace

SolarPosition solar_position(double lat, double lon, Instant t) {
  return position_from_terms(lat, lon, t, sun_terms(t));
}

double extraterrestrial_irradiance(int doy) {
  const double b = 2.0 * std::numbers::pi * (doy - 1) / 365.0;
  const double r = 1.00011 + 0.034221 * std::cos(b) + 0.00128 * std::sin(b) + 0.000719 * std::cos(2 * b) +
                   0.000077 * std::sin(2 * b);
  return 1366.1 * r;
}

double relative_airmass(double sza_deg) {
  if (!(sza_deg < 90.0)) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 / (std::cos(rad(sza_deg)) + 0.50572 * std::pow(96.07995 - sza_deg, -1.6364));
}

double clearsky_ghi(const SolarPosition& pos, const ClearSkyParams& params, Instant t) {
  if (!(pos.sza < 90.0)) return 0.0;
  const double alt = params.altitude_m;
  const double tl = params.turbidity(utc_month(t));
  const double pressure = 100.0 * std::pow((44331.514 - alt) / 11880.516, 1.0 / 0.1902632);
  const double am = relative_airmass(pos.sza) * pressure / 101325.0;
  const double fh1 = std::exp(-alt / 8000.0);
  const double fh2 = std::exp(-alt / 1250.0);
  const double cg1 = 5.09e-05 * alt + 0.868;
  const double cg2 = 3.92e-05 * alt + 0.0387;
  const double attenuation = std::exp(-cg2 * am * (fh1 + fh2 * (tl - 1.0)));
  const double ghi = cg1 * extraterrestrial_irradiance(day_of_year(t)) * std::cos(rad(pos.sza)) *
                     std::max(attenuation, 0.0);
  return std::max(ghi, 0.0);
}

std::vector<double> clearsky_grid(const ingest::GridGeometry& g, Instant t, const ClearSkyParams& params) {
  // The ephemeris terms depend on time only.
  const SunTerms terms = sun_terms(t);
  std::vector<double> out(g.size());
  for (std::size_t r = 0; r < g.nrows; ++r)
    for (std::size_t c = 0; c < g.ncols; ++c)
      out[r * g.ncols + c] = clearsky_ghi(position_from_terms(g.lat(r), g.lon(c), t, terms), params, t);
  return out;
}

ingest::RasterField ssi_to_csi(const ingest::RasterField& ssi, const ClearSkyConfig& cfg) {
  if (ssi.kind() != ingest::FieldKind::SSI) fail(Errc::WrongKind, "ssi_to_csi expects an SSI field");
  const auto clear = clearsky_grid(ssi.geometry(), ssi.timestamp(), cfg.params);
  ingest::RasterField out(ssi.geometry(), ssi.timestamp(), ingest::FieldKind::CSI, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!ssi.valid(i) || clear[i] < cfg.ghi_floor_wm2) {
      out.invalidate(i);
      continue;
    }
    out.set(i, std::clamp(ssi.value(i) / clear[i], 0.0, cfg.csi_cap));
  }
  return out;
}

ingest::RasterField csi_to_ssi(const ingest::RasterField& csi, const ClearSkyConfig& cfg) {
  if (csi.kind() != ingest::FieldKind::CSI) fail(Errc::WrongKind, "csi_to_ssi expects a CSI field");
  return csi_to_ssi(csi, clearsky_grid(csi.geometry(), csi.timestamp(), cfg.params));
}

ingest::RasterField csi_to_ssi(const ingest::RasterField& csi, std::span<const double> clear) {
  if (csi.kind() != ingest::FieldKind::CSI) fail(Errc::WrongKind, "csi_to_ssi expects a CSI field");
  if (clear.size() != csi.size()) fail(Errc::GeometryMismatch, "clear-sky grid size differs from the field");
  ingest::RasterField out(csi.geometry(), csi.timestamp(), ingest::FieldKind::SSI, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (csi.valid(i))
      out.set(i, csi.value(i) * clear[i]);
    else
      out.invalidate(i);
  }
  return out;
}

std::pair<Instant, Instant> sunrise_sunset(double lat, double lon, CivilDate date) {
  const Instant base = midnight(date);
  // Solar noon first, then each event refined with terms evaluated at the event itself.
  Instant noon = add_minutes(base, 720.0 - 4.0 * lon);
  for (int i = 0; i < 3; ++i) noon = add_minutes(base, 720.0 - 4.0 * lon - sun_terms(noon).eot_minutes);

  auto solve = [&](double sign) {
    Instant t = noon;
    for (int i = 0; i < 5; ++i) {
      const SunTerms s = sun_terms(t);
      const double cos_h = std::cos(rad(kSunriseZenith)) / (std::cos(rad(lat)) * std::cos(rad(s.declination))) -
                           std::tan(rad(lat)) * std::tan(rad(s.declination));
      if (cos_h > 1.0 || cos_h < -1.0)
        fail(Errc::PolarDayNight, "no sunrise/sunset at lat " + std::to_string(lat) + " on " + format_date(date));
      const double h = deg(std::acos(cos_h));
      t = add_minutes(base, 720.0 - 4.0 * (lon + sign * h) - s.eot_minutes);
    }
    return t;
  };
  return {solve(+1.0), solve(-1.0)};
}

}  // namespace rampcast::solargeo
