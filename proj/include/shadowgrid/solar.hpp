// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "shadowgrid/time.hpp"

namespace shadowgrid {

/// Geographic point in decimal degrees (WGS84).
struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  bool valid() const;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Sun direction in degrees: azimuth clockwise from true north in [0, 360),
/// altitude above the horizon in [-90, 90].
struct SolarPosition {
  double azimuth = 0.0;
  double altitude = 0.0;
};

inline constexpr double kSolarConstant = 1361.0;

/// Low-precision NOAA ephemeris (fractional year, equation of time, hour
/// angle). Geometric altitude, no refraction; good to a few tenths of a degree.
SolarPosition solar_position(const GeoPoint& p, const UtcInstant& t);

/// Direction the shadow points to: the antipode of the solar azimuth.
/// Throws NightTime when the sun is at or below the horizon.
double shadow_azimuth(const SolarPosition& s);

/// Direct-normal clear-sky irradiance in W/m^2:
///   1361 * 0.7^(AM^0.678), AM = 1 / sin(altitude), zero at or below the horizon.
double clear_sky_radiation(const SolarPosition& s);

}  // namespace shadowgrid
