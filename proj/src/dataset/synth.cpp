// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/dataset/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "shadowgrid/dataset/csv.hpp"
#include "shadowgrid/error.hpp"
#include "shadowgrid/solar.hpp"

namespace shadowgrid {
namespace {

using std::chrono::day;
using std::chrono::month;
using std::chrono::sys_days;
using std::chrono::weekday;
using std::chrono::year_month_day;

GeoPoint offset_m(const GeoPoint& origin, double east_m, double north_m) {
  const double m_per_deg = kEarthRadiusM * kPi<double> / 180.0;
  return GeoPoint{origin.latitude + north_m / m_per_deg,
                  origin.longitude + east_m / (m_per_deg * std::cos(deg_to_rad(origin.latitude)))};
}

bool nth_weekday(const year_month_day& d, weekday wd, unsigned n) {
  return weekday(sys_days(d)) == wd && (unsigned(d.day()) - 1) / 7 + 1 == n;
}

bool last_weekday(const year_month_day& d, weekday wd) {
  const auto next = year_month_day(sys_days(d) + std::chrono::days(7));
  return weekday(sys_days(d)) == wd && next.month() != d.month();
}

struct Ar1 {
  double phi;
  double sigma;
  double state = 0.0;
  double next(std::mt19937_64& rng, std::normal_distribution<double>& z) {
    state = phi * state + sigma * z(rng);
    return state;
  }
};

}  // namespace

double occupancy_factor(CalendarCategory c) {
  switch (c) {
    case CalendarCategory::ClassDay: return 1.0;
    case CalendarCategory::Weekend: return 0.6;
    case CalendarCategory::InSemesterHoliday: return 0.75;
    case CalendarCategory::SummerSemester: return 0.85;
    case CalendarCategory::Holiday: return 0.5;
  }
  return 1.0;
}

CalendarCategory campus_calendar_category(const year_month_day& d) {
  const unsigned m = unsigned(d.month());
  const unsigned dd = unsigned(d.day());
  const weekday wd(sys_days{d});
  const bool holiday = (m == 1 && dd == 1) || (m == 1 && nth_weekday(d, std::chrono::Monday, 3)) ||
                       (m == 5 && last_weekday(d, std::chrono::Monday)) || (m == 7 && dd == 4) ||
                       (m == 9 && nth_weekday(d, std::chrono::Monday, 1)) ||
                       (m == 11 && (nth_weekday(d, std::chrono::Thursday, 4) ||
                                    (wd == std::chrono::Friday && dd >= 23 && dd <= 29))) ||
                       (m == 12 && dd >= 24);
  if (holiday) return CalendarCategory::Holiday;
  if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) return CalendarCategory::Weekend;
  const bool breaks = (m == 3 && dd >= 14 && dd <= 18) || (m == 10 && (dd == 10 || dd == 11)) ||
                      (m == 11 && wd == std::chrono::Wednesday && dd >= 22 && dd <= 28);
  if (breaks) return CalendarCategory::InSemesterHoliday;
  if ((m == 5 && dd >= 15) || m == 6 || m == 7 || (m == 8 && dd <= 14)) return CalendarCategory::SummerSemester;
  return CalendarCategory::ClassDay;
}

double seasonal_modulation(const UtcInstant& t) {
  return 0.15 + 0.85 * std::abs(std::cos(2.0 * kPi<double> * (t.day_of_year() - 172) / 365.25));
}

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, "synth: " + what); };
  if (buildings < 1) bad("buildings must be >= 1");
  if (hours < 1) bad("hours must be >= 1");
  if (!(kappa >= 0.0)) bad("kappa must be >= 0");
  if (!(coupling_scale >= 0.0)) bad("coupling_scale must be >= 0");
  if (!(decay_length_m > 0.0)) bad("decay_length_m must be > 0");
  if (!(grid_spacing_m > 0.0) || !(mean_height_m > 0.0) || !(jitter_m >= 0.0)) bad("layout sizes must be positive");
  if (jitter_m * 2.0 >= grid_spacing_m) bad("jitter must be below half the grid spacing");
  if (!(noise >= 0.0)) bad("noise must be >= 0");
  if (!origin.valid()) bad("origin is not a valid coordinate");
  try {
    (void)UtcInstant::parse(start);
  } catch (const Error&) {
    bad("start is not a timestamp: " + start);
  }
}

nlohmann::json SynthConfig::to_json() const {
  return {{"buildings", buildings},       {"hours", hours},
          {"start", start},               {"utc_offset_hours", utc_offset_hours},
          {"origin_lat", origin.latitude}, {"origin_lon", origin.longitude},
          {"grid_spacing_m", grid_spacing_m}, {"mean_height_m", mean_height_m},
          {"jitter_m", jitter_m},         {"kappa", kappa},
          {"coupling_scale", coupling_scale}, {"decay_length_m", decay_length_m},
          {"seasonal", seasonal},         {"noise", noise}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "synth config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "buildings") c.buildings = value.get<Index>();
      else if (key == "hours") c.hours = value.get<Index>();
      else if (key == "start") c.start = value.get<std::string>();
      else if (key == "utc_offset_hours") c.utc_offset_hours = value.get<double>();
      else if (key == "origin_lat") c.origin.latitude = value.get<double>();
      else if (key == "origin_lon") c.origin.longitude = value.get<double>();
      else if (key == "grid_spacing_m") c.grid_spacing_m = value.get<double>();
      else if (key == "mean_height_m") c.mean_height_m = value.get<double>();
      else if (key == "jitter_m") c.jitter_m = value.get<double>();
      else if (key == "kappa") c.kappa = value.get<double>();
      else if (key == "coupling_scale") c.coupling_scale = value.get<double>();
      else if (key == "decay_length_m") c.decay_length_m = value.get<double>();
      else if (key == "seasonal") c.seasonal = value.get<bool>();
      else if (key == "noise") c.noise = value.get<double>();
      else throw Error(ErrorKind::InvalidConfig, fmt::format("synth: unknown key '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("synth: {}", e.what()));
  }
  c.validate();
  return c;
}

SynthCity synth_generate(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SynthCity city;
  Dataset& data = city.data;
  data.utc_offset_hours = config.utc_offset_hours;
  const Index n = config.buildings;
  const Index steps = config.hours;

  // Layout and building attributes.
  const auto cols = static_cast<Index>(std::ceil(std::sqrt(double(n))));
  VectorXd base(n);
  for (Index b = 0; b < n; ++b) {
    const double east = double(b % cols) * config.grid_spacing_m + uniform(-config.jitter_m, config.jitter_m);
    const double north = double(b / cols) * config.grid_spacing_m + uniform(-config.jitter_m, config.jitter_m);
    const bool tall = unit(rng) < 0.5;
    const double height = config.mean_height_m * (tall ? uniform(1.4, 2.2) : uniform(0.4, 0.9));
    const int floors = std::max(1, static_cast<int>(std::lround(height / kDefaultFloorHeightM)));

    BuildingMeta m;
    m.id = fmt::format("B{:05d}", 10001 + b);
    m.occupancy_period = 1 + static_cast<int>(unit(rng) * kOccupancyPeriods);
    m.leed = unit(rng) < 0.3;
    m.gross_floor_area = uniform(4000.0, 20000.0);
    m.num_floors = floors;
    m.window_wall_ratio = uniform(0.2, 0.6);
    const double side = std::clamp(std::sqrt(m.gross_floor_area / floors), 12.0, 30.0);
    m.envelope_area = 4.0 * side * height + 2.0 * side * side;
    m.thermal_mass = static_cast<ThermalMass>(std::min<int>(2, static_cast<int>(unit(rng) * 3.0)));
    m.internal_space_area = 0.85 * m.gross_floor_area;
    base(b) = 0.008 * m.gross_floor_area;

    BuildingFootprint f;
    f.id = m.id;
    f.floors = floors;
    f.height_m = height;
    const double h = side / 2.0;
    f.polygon = {offset_m(config.origin, east - h, north - h), offset_m(config.origin, east + h, north - h),
                 offset_m(config.origin, east + h, north + h), offset_m(config.origin, east - h, north + h)};
    data.meta.push_back(std::move(m));
    data.footprints.push_back(std::move(f));
  }

  // Timeline, calendar and weather.
  const UtcInstant start = UtcInstant::parse(config.start);
  Ar1 temp_noise{0.95, 0.6}, cloud{0.9, 0.35}, humid{0.9, 2.5}, wind{0.85, 0.8};
  for (Index t = 0; t < steps; ++t) {
    const UtcInstant stamp = start.plus_hours(t);
    const UtcInstant local = stamp.to_local(config.utc_offset_hours);
    data.timestamps.push_back(stamp);
    const auto day = local.date();
    const auto category = campus_calendar_category(day);
    city.calendar[sys_days(day)] = category;
    data.calendar.push_back(category);

    const double doy = local.day_of_year();
    const double hour = local.hour_of_day();
    WeatherRecord w;
    w.timestamp = stamp;
    w.air_temp_c = 17.0 - 9.0 * std::cos(2.0 * kPi<double> * (doy - 15.0) / 365.25) +
                   5.0 * std::cos(2.0 * kPi<double> * (hour - 15.0) / 24.0) + temp_noise.next(rng, gauss);
    const double cloud_factor = 1.0 - 0.6 / (1.0 + std::exp(-2.0 * cloud.next(rng, gauss)));
    w.solar_density_wm2 = clear_sky_radiation(solar_position(config.origin, stamp)) * cloud_factor;
    w.rel_humidity_pct = std::clamp(70.0 - 2.0 * (w.air_temp_c - 17.0) + humid.next(rng, gauss), 5.0, 100.0);
    w.wind_speed_ms = std::max(0.0, 3.0 + wind.next(rng, gauss));
    data.weather.push_back(w);
  }

  // Graph and shading term.
  city.graph = build_graph(data.footprints);
  const auto attrs = edge_attribute_series(city.graph, data.timestamps);
  city.coupling = RowMatrixXd::Zero(n, steps);
  if (config.kappa > 0.0) {
    for (Index k = 0; k < city.graph.edge_count(); ++k) {
      const auto& e = city.graph.edges()[static_cast<std::size_t>(k)];
      const double decay = std::exp(-e.distance_m / config.decay_length_m);
      for (Index t = 0; t < steps; ++t) {
        const auto a = attrs.at(k, t);
        const double season = config.seasonal ? seasonal_modulation(data.timestamps[t]) : 1.0;
        const double term = a.binary * (a.radiation / 1000.0) * std::cos(a.angle_rad) * decay;
        city.coupling(e.dst, t) += config.kappa * config.coupling_scale * season * base(e.dst) * term;
      }
    }
  }

  data.energy.resize(n, steps);
  for (Index b = 0; b < n; ++b) {
    for (Index t = 0; t < steps; ++t) {
      const double temp = data.weather[t].air_temp_c;
      const double load = occupancy_factor(data.calendar[t]) + 0.04 * std::max(0.0, temp - 21.0) +
                          0.03 * std::max(0.0, 12.0 - temp) + config.noise * gauss(rng);
      const double kwh = base(b) * load - city.coupling(b, t);
      data.energy(b, t) = std::max(0.0, kwh);
    }
  }
  return city;
}

void write_synth(const SynthCity& city, const std::filesystem::path& dir) {
  write_dataset(city.data, city.calendar, DatasetPaths::in_directory(dir));
  write_text(dir / "coupling_audit.csv", energy_to_csv(city.data.ids(), city.data.timestamps, city.coupling)
                                             .replace(0, std::string("timestamp_utc,building_id,kwh").size(),
                                                      "timestamp_utc,building_id,coupling_kwh"));
}

}  // namespace shadowgrid
