// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shadowgrid/geo.hpp"
#include "shadowgrid/time.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {

enum class ThermalMass { Light, Medium, High };

enum class CalendarCategory { ClassDay, Weekend, InSemesterHoliday, SummerSemester, Holiday };

inline constexpr int kOccupancyPeriods = 6;
inline constexpr std::array<std::string_view, 3> kThermalMassNames = {"light", "medium", "high"};
inline constexpr std::array<std::string_view, 5> kCalendarNames = {"class_day", "weekend", "in_semester_holiday",
                                                                   "summer_semester", "holiday"};

std::string_view to_string(ThermalMass m);
std::string_view to_string(CalendarCategory c);
/// Throw UnknownCategory.
ThermalMass parse_thermal_mass(std::string_view text);
CalendarCategory parse_calendar_category(std::string_view text);

struct BuildingMeta {
  std::string id;
  int occupancy_period = 1;  // 1..6
  bool leed = false;
  double gross_floor_area = 0.0;
  int num_floors = 1;
  double window_wall_ratio = 0.0;
  double envelope_area = 0.0;
  ThermalMass thermal_mass = ThermalMass::Medium;
  double internal_space_area = 0.0;

  /// Throws InvalidInput / UnknownCategory.
  void validate() const;
};

struct WeatherRecord {
  UtcInstant timestamp;
  double air_temp_c = 0.0;
  double rel_humidity_pct = 0.0;
  double wind_speed_ms = 0.0;
  double solar_density_wm2 = 0.0;
};

using Calendar = std::map<std::chrono::sys_days, CalendarCategory>;

/// Hour-aligned campus data. Buildings are sorted by id; `energy` is
/// buildings x steps in kWh.
struct Dataset {
  std::vector<BuildingFootprint> footprints;
  std::vector<BuildingMeta> meta;
  std::vector<UtcInstant> timestamps;
  std::vector<WeatherRecord> weather;
  std::vector<CalendarCategory> calendar;  // per step, by local date
  RowMatrixXd energy;
  double utc_offset_hours = 0.0;

  Index buildings() const { return static_cast<Index>(meta.size()); }
  Index steps() const { return static_cast<Index>(timestamps.size()); }
  std::vector<std::string> ids() const;
};

struct DatasetPaths {
  std::filesystem::path footprints, meta, weather, energy, calendar;

  /// Canonical file names inside one directory.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

struct IngestOptions {
  std::vector<std::string> exclusions;
  double utc_offset_hours = 0.0;
  /// Longest run of missing energy hours that is forward-filled.
  int max_fill_hours = 3;
};

/// Reads and aligns the five input files on the weather timeline. Missing
/// energy or weather hours are forward-filled up to `max_fill_hours`; longer
/// gaps raise TimelineGap. Ids must agree across files after exclusions
/// (IdMismatch).
Dataset ingest(const DatasetPaths& paths, const IngestOptions& options);

std::vector<BuildingMeta> parse_meta_csv(std::string_view text);
std::vector<WeatherRecord> parse_weather_csv(std::string_view text);
Calendar parse_calendar_csv(std::string_view text);

std::string meta_to_csv(const std::vector<BuildingMeta>& meta);
std::string weather_to_csv(const std::vector<WeatherRecord>& weather);
std::string calendar_to_csv(const Calendar& calendar);
/// Long form `timestamp_utc,building_id,kwh`, ordered by time then id.
std::string energy_to_csv(const std::vector<std::string>& ids, const std::vector<UtcInstant>& timestamps,
                          const RowMatrixXd& energy);

/// Writes the five canonical files of `paths`.
void write_dataset(const Dataset& data, const Calendar& calendar, const DatasetPaths& paths);

}  // namespace shadowgrid
