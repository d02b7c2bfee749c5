// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shadowgrid/solar.hpp"

namespace shadowgrid {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kDefaultFloorHeightM = 3.5;

struct BuildingFootprint {
  std::string id;
  std::vector<GeoPoint> polygon;  // outer ring; a repeated closing vertex is allowed
  int floors = 1;
  std::optional<double> height_m;

  /// Throws InvalidInput / DegeneratePolygon when the invariants do not hold.
  void validate() const;
};

/// Area-weighted centroid on an equirectangular projection anchored at the
/// vertex mean.
GeoPoint centroid(const BuildingFootprint& f);

/// Haversine great-circle distance.
double distance_m(const GeoPoint& a, const GeoPoint& b);

/// Initial great-circle bearing a -> b, clockwise from north, in [0, 360).
double bearing_deg(const GeoPoint& a, const GeoPoint& b);

double effective_height(const BuildingFootprint& f, double floor_height_m = kDefaultFloorHeightM);

/// GeoJSON FeatureCollection with `properties.id`, `properties.floors`,
/// optional `properties.height_m` and Polygon geometry (first ring used).
std::vector<BuildingFootprint> read_footprints(const std::filesystem::path& path);
std::vector<BuildingFootprint> parse_footprints(const std::string& geojson_text);
std::string footprints_to_geojson(const std::vector<BuildingFootprint>& footprints);

}  // namespace shadowgrid
