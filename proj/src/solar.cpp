// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/solar.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "shadowgrid/error.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {

bool GeoPoint::valid() const {
  return std::isfinite(latitude) && std::isfinite(longitude) && latitude >= -90.0 && latitude <= 90.0 &&
         longitude >= -180.0 && longitude <= 180.0;
}

SolarPosition solar_position(const GeoPoint& p, const UtcInstant& t) {
  if (!p.valid()) {
    throw Error(ErrorKind::InvalidInput, fmt::format("invalid point ({}, {})", p.latitude, p.longitude));
  }
  constexpr double pi = kPi<double>;
  const double hour = t.hour_of_day();
  const double days_in_year = t.leap_year() ? 366.0 : 365.0;
  const double gamma = 2.0 * pi / days_in_year * (t.day_of_year() - 1 + (hour - 12.0) / 24.0);

  const double eqtime = 229.18 * (0.000075 + 0.001868 * std::cos(gamma) - 0.032077 * std::sin(gamma) -
                                  0.014615 * std::cos(2 * gamma) - 0.040849 * std::sin(2 * gamma));
  const double decl = 0.006918 - 0.399912 * std::cos(gamma) + 0.070257 * std::sin(gamma) -
                      0.006758 * std::cos(2 * gamma) + 0.000907 * std::sin(2 * gamma) -
                      0.002697 * std::cos(3 * gamma) + 0.00148 * std::sin(3 * gamma);

  // True solar time in minutes; longitude east-positive, instant already UTC.
  const double true_solar_minutes = hour * 60.0 + eqtime + 4.0 * p.longitude;
  const double hour_angle = deg_to_rad(true_solar_minutes / 4.0 - 180.0);
  const double lat = deg_to_rad(p.latitude);

  const double cos_zenith = std::clamp(
      std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle), -1.0, 1.0);
  const double altitude = pi / 2.0 - std::acos(cos_zenith);

  double azimuth = std::atan2(std::sin(hour_angle),
                              std::cos(hour_angle) * std::sin(lat) - std::tan(decl) * std::cos(lat)) +
                   pi;
  azimuth = std::fmod(azimuth, 2.0 * pi);
  if (azimuth < 0.0) azimuth += 2.0 * pi;

  SolarPosition out{rad_to_deg(azimuth), rad_to_deg(altitude)};
  if (out.azimuth >= 360.0) out.azimuth = 0.0;
  return out;
}

double shadow_azimuth(const SolarPosition& s) {
  if (!(s.altitude > 0.0)) {
    throw Error(ErrorKind::NightTime, fmt::format("sun altitude {} deg is not above the horizon", s.altitude));
  }
  double az = std::fmod(s.azimuth + 180.0, 360.0);
  if (az < 0.0) az += 360.0;
  return az;
}

double clear_sky_radiation(const SolarPosition& s) {
  if (!(s.altitude > 0.0)) return 0.0;
  const double air_mass = 1.0 / std::sin(deg_to_rad(std::min(s.altitude, 90.0)));
  return kSolarConstant * std::pow(0.7, std::pow(air_mass, 0.678));
}

}  // namespace shadowgrid
