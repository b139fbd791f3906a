#pragma once

#include <array>
#include <span>
#include <utility>

#include "rampcast/ingest.hpp"
#include "rampcast/time.hpp"

namespace rampcast::solargeo {

/// Geometric (unrefracted) sun position. Azimuth is measured clockwise from north.
struct SolarPosition {
  double sza = 0.0;  // degrees, [0, 180]
  double azi = 0.0;  // degrees, [0, 360)
};

/// Linke turbidity (one value per calendar month) and site altitude.
struct ClearSkyParams {
  std::array<double, 12> linke_turbidity{};
  double altitude_m = 0.0;

  ClearSkyParams() { linke_turbidity.fill(3.0); }
  explicit ClearSkyParams(double turbidity, double altitude = 0.0) : altitude_m(altitude) {
    linke_turbidity.fill(turbidity);
  }
  ClearSkyParams(const std::array<double, 12>& monthly, double altitude) : linke_turbidity(monthly), altitude_m(altitude) {}

  /// month in 1..12
  double turbidity(int month) const { return linke_turbidity.at(std::size_t(month - 1)); }
  void validate() const;
};

/// Conversion policy between SSI and CSI.
struct ClearSkyConfig {
  ClearSkyParams params;
  double csi_cap = 1.6;
  double ghi_floor_wm2 = 50.0;
};

/// NOAA (Meeus low-order) solar position with equation of time and declination.
SolarPosition solar_position(double lat, double lon, Instant t);

/// Extraterrestrial normal irradiance (Spencer 1971 Sun-Earth distance factor, 1366.1 W m-2).
double extraterrestrial_irradiance(int day_of_year);

/// Kasten-Young 1989 relative optical air mass; NaN for sza >= 90.
double relative_airmass(double sza_deg);

/// Ineichen-Perez clear-sky global horizontal irradiance in W m-2; exactly 0 when sza >= 90.
double clearsky_ghi(const SolarPosition& pos, const ClearSkyParams& params, Instant t);

/// Per-cell CSI = SSI / clear-sky GHI; cells below the GHI floor are masked, CSI clipped to
/// [0, csi_cap]. Throws WrongKind unless ssi.kind() is SSI.
ingest::RasterField ssi_to_csi(const ingest::RasterField& ssi, const ClearSkyConfig& cfg);
/// SSI = CSI * clear-sky GHI at the field's timestamp. Throws WrongKind unless kind is CSI.
ingest::RasterField csi_to_ssi(const ingest::RasterField& csi, const ClearSkyConfig& cfg);
/// Same with a precomputed clear-sky grid (clearsky_grid at csi.timestamp()).
ingest::RasterField csi_to_ssi(const ingest::RasterField& csi, std::span<const double> clearsky);

/// Clear-sky GHI for every cell of the grid at t.
std::vector<double> clearsky_grid(const ingest::GridGeometry& geometry, Instant t, const ClearSkyParams& params);

/// Sunrise and sunset (geometric zenith 90.833 deg) for the UTC civil date.
/// Throws PolarDayNight when the sun does not cross that zenith.
std::pair<Instant, Instant> sunrise_sunset(double lat, double lon, CivilDate date);

inline constexpr double kSunriseZenith = 90.833;

}  // namespace rampcast::solargeo
