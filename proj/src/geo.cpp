// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/geo.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "shadowgrid/error.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {
namespace {

std::vector<GeoPoint> open_ring(const std::vector<GeoPoint>& ring) {
  std::vector<GeoPoint> out = ring;
  if (out.size() >= 2 && out.front() == out.back()) out.pop_back();
  return out;
}

std::size_t distinct_vertices(const std::vector<GeoPoint>& ring) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    bool seen = false;
    for (std::size_t j = 0; j < i && !seen; ++j) seen = ring[j] == ring[i];
    if (!seen) ++count;
  }
  return count;
}

}  // namespace

void BuildingFootprint::validate() const {
  if (id.empty()) throw Error(ErrorKind::InvalidInput, "footprint without id");
  for (const auto& p : polygon) {
    if (!p.valid()) throw Error(ErrorKind::InvalidInput, fmt::format("footprint {}: invalid vertex", id));
  }
  if (distinct_vertices(open_ring(polygon)) < 3) {
    throw Error(ErrorKind::DegeneratePolygon, fmt::format("footprint {}: fewer than 3 distinct vertices", id));
  }
  if (floors < 1) throw Error(ErrorKind::InvalidInput, fmt::format("footprint {}: floors < 1", id));
  if (height_m && !(*height_m > 0.0 && std::isfinite(*height_m))) {
    throw Error(ErrorKind::InvalidInput, fmt::format("footprint {}: height must be positive", id));
  }
}

GeoPoint centroid(const BuildingFootprint& f) {
  const auto ring = open_ring(f.polygon);
  if (distinct_vertices(ring) < 3) {
    throw Error(ErrorKind::DegeneratePolygon, fmt::format("footprint {}: fewer than 3 distinct vertices", f.id));
  }
  double lat0 = 0.0, lon0 = 0.0;
  for (const auto& p : ring) {
    lat0 += p.latitude;
    lon0 += p.longitude;
  }
  lat0 /= static_cast<double>(ring.size());
  lon0 /= static_cast<double>(ring.size());
  const double kx = kEarthRadiusM * std::cos(deg_to_rad(lat0)) * kPi<double> / 180.0;
  const double ky = kEarthRadiusM * kPi<double> / 180.0;

  double twice_area = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % ring.size()];
    const double xa = (a.longitude - lon0) * kx, ya = (a.latitude - lat0) * ky;
    const double xb = (b.longitude - lon0) * kx, yb = (b.latitude - lat0) * ky;
    const double cross = xa * yb - xb * ya;
    twice_area += cross;
    cx += (xa + xb) * cross;
    cy += (ya + yb) * cross;
  }
  // 1e-6 m^2: anything smaller is a sliver, not a building.
  if (std::abs(twice_area) < 2e-6) {
    throw Error(ErrorKind::DegeneratePolygon, fmt::format("footprint {}: zero area", f.id));
  }
  cx /= 3.0 * twice_area;
  cy /= 3.0 * twice_area;
  return GeoPoint{lat0 + cy / ky, lon0 + cx / kx};
}

double distance_m(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = deg_to_rad(a.latitude), lat2 = deg_to_rad(b.latitude);
  const double dlat = lat2 - lat1;
  const double dlon = deg_to_rad(b.longitude - a.longitude);
  const double h = std::pow(std::sin(dlat / 2), 2) + std::cos(lat1) * std::cos(lat2) * std::pow(std::sin(dlon / 2), 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double bearing_deg(const GeoPoint& a, const GeoPoint& b) {
  if (a == b) throw Error(ErrorKind::CoincidentPoints, "bearing between identical points");
  const double lat1 = deg_to_rad(a.latitude), lat2 = deg_to_rad(b.latitude);
  const double dlon = deg_to_rad(b.longitude - a.longitude);
  const double y = std::sin(dlon) * std::cos(lat2);
  const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
  double deg = rad_to_deg(std::atan2(y, x));
  deg = std::fmod(deg + 360.0, 360.0);
  return deg >= 360.0 ? 0.0 : deg;
}

double effective_height(const BuildingFootprint& f, double floor_height_m) {
  return f.height_m ? *f.height_m : f.floors * floor_height_m;
}

std::vector<BuildingFootprint> parse_footprints(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("footprints: {}", e.what()));
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw Error(ErrorKind::ParseError, "footprints: expected a GeoJSON FeatureCollection");
  }
  std::vector<BuildingFootprint> out;
  for (const auto& feature : doc.at("features")) {
    try {
      const auto& props = feature.at("properties");
      const auto& geom = feature.at("geometry");
      if (geom.at("type").get<std::string>() != "Polygon") {
        throw Error(ErrorKind::ParseError, "footprints: only Polygon geometries are supported");
      }
      BuildingFootprint f;
      f.id = props.at("id").get<std::string>();
      f.floors = props.at("floors").get<int>();
      if (props.contains("height_m") && !props.at("height_m").is_null()) {
        f.height_m = props.at("height_m").get<double>();
      }
      for (const auto& coord : geom.at("coordinates").at(0)) {
        f.polygon.push_back(GeoPoint{coord.at(1).get<double>(), coord.at(0).get<double>()});
      }
      f.validate();
      out.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, fmt::format("footprints: malformed feature: {}", e.what()));
    }
  }
  return out;
}

std::vector<BuildingFootprint> read_footprints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_footprints(ss.str());
}

std::string footprints_to_geojson(const std::vector<BuildingFootprint>& footprints) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : footprints) {
    nlohmann::json ring = nlohmann::json::array();
    for (const auto& p : f.polygon) ring.push_back({p.longitude, p.latitude});
    if (!f.polygon.empty() && !(f.polygon.front() == f.polygon.back())) {
      ring.push_back({f.polygon.front().longitude, f.polygon.front().latitude});
    }
    nlohmann::json props = {{"id", f.id}, {"floors", f.floors}};
    if (f.height_m) props["height_m"] = *f.height_m;
    features.push_back({{"type", "Feature"},
                        {"properties", props},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}}}});
  }
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump(1);
}

}  // namespace shadowgrid
