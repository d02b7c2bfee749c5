// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/dataset/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "shadowgrid/dataset/csv.hpp"
#include "shadowgrid/error.hpp"

namespace shadowgrid {
namespace {

template <typename Names>
std::size_t lookup(const Names& names, std::string_view text, std::string_view what) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return i;
  }
  throw Error(ErrorKind::UnknownCategory, fmt::format("unknown {} '{}'", what, text));
}

std::string describe_difference(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::vector<std::string> only;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only));
  if (only.size() > 5) only.resize(5);
  return fmt::format("{}", fmt::join(only, ", "));
}

void require_same_ids(const std::set<std::string>& reference, const std::set<std::string>& other,
                      std::string_view what) {
  if (reference != other) {
    throw Error(ErrorKind::IdMismatch,
                fmt::format("{} ids differ from meta ids: {}", what, describe_difference(reference, other)));
  }
}

}  // namespace

std::string_view to_string(ThermalMass m) { return kThermalMassNames[static_cast<std::size_t>(m)]; }
std::string_view to_string(CalendarCategory c) { return kCalendarNames[static_cast<std::size_t>(c)]; }

ThermalMass parse_thermal_mass(std::string_view text) {
  return static_cast<ThermalMass>(lookup(kThermalMassNames, text, "thermal mass"));
}

CalendarCategory parse_calendar_category(std::string_view text) {
  return static_cast<CalendarCategory>(lookup(kCalendarNames, text, "calendar category"));
}

void BuildingMeta::validate() const {
  if (id.empty()) throw Error(ErrorKind::InvalidInput, "building meta with empty id");
  if (occupancy_period < 1 || occupancy_period > kOccupancyPeriods) {
    throw Error(ErrorKind::UnknownCategory, fmt::format("{}: occupancy period {} not in 1..6", id, occupancy_period));
  }
  if (!(gross_floor_area > 0.0) || !(envelope_area > 0.0) || !(internal_space_area > 0.0)) {
    throw Error(ErrorKind::InvalidInput, fmt::format("{}: areas must be positive", id));
  }
  if (!(window_wall_ratio >= 0.0 && window_wall_ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, fmt::format("{}: window_wall_ratio outside [0, 1]", id));
  }
  if (num_floors < 1) throw Error(ErrorKind::InvalidInput, fmt::format("{}: num_floors < 1", id));
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  for (const auto& m : meta) out.push_back(m.id);
  return out;
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return DatasetPaths{dir / "footprints.geojson", dir / "meta.csv", dir / "weather.csv", dir / "energy.csv",
                      dir / "calendar.csv"};
}

std::vector<BuildingMeta> parse_meta_csv(std::string_view text) {
  const auto t = parse_csv(text, "meta.csv");
  const auto c_id = t.column("id"), c_occ = t.column("occupancy_period"), c_leed = t.column("leed"),
             c_gfa = t.column("gross_floor_area"), c_floors = t.column("num_floors"),
             c_wwr = t.column("window_wall_ratio"), c_env = t.column("envelope_area"),
             c_mass = t.column("thermal_mass"), c_isa = t.column("internal_space_area");
  std::vector<BuildingMeta> out;
  for (const auto& r : t.rows) {
    BuildingMeta m;
    m.id = r[c_id];
    const auto ctx = fmt::format("meta.csv {}", m.id);
    m.occupancy_period = static_cast<int>(parse_integer(r[c_occ], ctx));
    const auto leed = parse_integer(r[c_leed], ctx);
    if (leed != 0 && leed != 1) throw Error(ErrorKind::ParseError, ctx + ": leed must be 0 or 1");
    m.leed = leed == 1;
    m.gross_floor_area = parse_double(r[c_gfa], ctx);
    m.num_floors = static_cast<int>(parse_integer(r[c_floors], ctx));
    m.window_wall_ratio = parse_double(r[c_wwr], ctx);
    m.envelope_area = parse_double(r[c_env], ctx);
    m.thermal_mass = parse_thermal_mass(r[c_mass]);
    m.internal_space_area = parse_double(r[c_isa], ctx);
    m.validate();
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<WeatherRecord> parse_weather_csv(std::string_view text) {
  const auto t = parse_csv(text, "weather.csv");
  const auto c_t = t.column("timestamp_utc"), c_air = t.column("air_temp_c"), c_rh = t.column("rel_humidity_pct"),
             c_wind = t.column("wind_speed_ms"), c_sol = t.column("solar_density_wm2");
  std::vector<WeatherRecord> out;
  for (const auto& r : t.rows) {
    WeatherRecord w;
    try {
      w.timestamp = UtcInstant::parse(r[c_t]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, fmt::format("weather.csv: {}", e.what()));
    }
    const auto ctx = fmt::format("weather.csv {}", r[c_t]);
    w.air_temp_c = parse_double(r[c_air], ctx);
    w.rel_humidity_pct = parse_double(r[c_rh], ctx);
    w.wind_speed_ms = parse_double(r[c_wind], ctx);
    w.solar_density_wm2 = parse_double(r[c_sol], ctx);
    if (w.rel_humidity_pct < 0.0 || w.rel_humidity_pct > 100.0 || w.wind_speed_ms < 0.0 ||
        w.solar_density_wm2 < 0.0) {
      throw Error(ErrorKind::InvalidInput, ctx + ": value out of range");
    }
    out.push_back(w);
  }
  return out;
}

Calendar parse_calendar_csv(std::string_view text) {
  const auto t = parse_csv(text, "calendar.csv");
  const auto c_date = t.column("date"), c_cat = t.column("category");
  Calendar out;
  for (const auto& r : t.rows) {
    std::chrono::year_month_day d;
    try {
      d = parse_date(r[c_date]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, fmt::format("calendar.csv: {}", e.what()));
    }
    out[std::chrono::sys_days(d)] = parse_calendar_category(r[c_cat]);
  }
  return out;
}

std::string meta_to_csv(const std::vector<BuildingMeta>& meta) {
  std::string out =
      "id,occupancy_period,leed,gross_floor_area,num_floors,window_wall_ratio,envelope_area,thermal_mass,"
      "internal_space_area\n";
  for (const auto& m : meta) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", m.id, m.occupancy_period, m.leed ? 1 : 0,
                       format_double(m.gross_floor_area), m.num_floors, format_double(m.window_wall_ratio),
                       format_double(m.envelope_area), to_string(m.thermal_mass),
                       format_double(m.internal_space_area));
  }
  return out;
}

std::string weather_to_csv(const std::vector<WeatherRecord>& weather) {
  std::string out = "timestamp_utc,air_temp_c,rel_humidity_pct,wind_speed_ms,solar_density_wm2\n";
  for (const auto& w : weather) {
    out += fmt::format("{},{},{},{},{}\n", w.timestamp.iso8601(), format_double(w.air_temp_c),
                       format_double(w.rel_humidity_pct), format_double(w.wind_speed_ms),
                       format_double(w.solar_density_wm2));
  }
  return out;
}

std::string calendar_to_csv(const Calendar& calendar) {
  std::string out = "date,category\n";
  for (const auto& [day, cat] : calendar) {
    out += fmt::format("{},{}\n", format_date(std::chrono::year_month_day(day)), to_string(cat));
  }
  return out;
}

std::string energy_to_csv(const std::vector<std::string>& ids, const std::vector<UtcInstant>& timestamps,
                          const RowMatrixXd& energy) {
  std::string out = "timestamp_utc,building_id,kwh\n";
  for (std::size_t t = 0; t < timestamps.size(); ++t) {
    const auto stamp = timestamps[t].iso8601();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      out += fmt::format("{},{},{}\n", stamp, ids[b], format_double(energy(Index(b), Index(t))));
    }
  }
  return out;
}

void write_dataset(const Dataset& data, const Calendar& calendar, const DatasetPaths& paths) {
  write_text(paths.footprints, footprints_to_geojson(data.footprints));
  write_text(paths.meta, meta_to_csv(data.meta));
  write_text(paths.weather, weather_to_csv(data.weather));
  write_text(paths.calendar, calendar_to_csv(calendar));
  write_text(paths.energy, energy_to_csv(data.ids(), data.timestamps, data.energy));
}

Dataset ingest(const DatasetPaths& paths, const IngestOptions& options) {
  const std::set<std::string> excluded(options.exclusions.begin(), options.exclusions.end());
  auto keep = [&](const std::string& id) { return excluded.count(id) == 0; };

  Dataset out;
  out.utc_offset_hours = options.utc_offset_hours;

  for (auto& m : parse_meta_csv(read_text(paths.meta))) {
    if (keep(m.id)) out.meta.push_back(std::move(m));
  }
  std::sort(out.meta.begin(), out.meta.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.meta.size(); ++i) {
    if (out.meta[i].id == out.meta[i - 1].id) {
      throw Error(ErrorKind::DuplicateId, fmt::format("meta.csv: duplicate id {}", out.meta[i].id));
    }
  }
  if (out.meta.empty()) throw Error(ErrorKind::InvalidInput, "no buildings left after exclusions");
  std::set<std::string> ids;
  std::map<std::string, Index> index;
  for (std::size_t i = 0; i < out.meta.size(); ++i) {
    index.emplace(out.meta[i].id, static_cast<Index>(i));
    ids.insert(out.meta[i].id);
  }

  std::vector<BuildingFootprint> footprints;
  for (auto& f : read_footprints(paths.footprints)) {
    if (keep(f.id)) footprints.push_back(std::move(f));
  }
  std::set<std::string> footprint_ids;
  for (const auto& f : footprints) footprint_ids.insert(f.id);
  if (footprint_ids.size() != footprints.size()) throw Error(ErrorKind::DuplicateId, "footprints: duplicate id");
  require_same_ids(ids, footprint_ids, "footprint");
  std::sort(footprints.begin(), footprints.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  out.footprints = std::move(footprints);

  // Weather defines the hourly timeline.
  auto weather = parse_weather_csv(read_text(paths.weather));
  if (weather.empty()) throw Error(ErrorKind::EmptyTimeline, "weather.csv has no rows");
  std::sort(weather.begin(), weather.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  const UtcInstant start = weather.front().timestamp;
  const auto step_of = [&](const UtcInstant& t) -> std::optional<Index> {
    const auto secs = (t.seconds() - start.seconds()).count();
    if (secs % 3600 != 0) {
      throw Error(ErrorKind::InvalidInput, fmt::format("{} is not on the hourly grid", t.iso8601()));
    }
    return static_cast<Index>(secs / 3600);
  };
  const Index steps = *step_of(weather.back().timestamp) + 1;
  std::vector<std::optional<WeatherRecord>> slots(static_cast<std::size_t>(steps));
  for (const auto& w : weather) {
    auto& slot = slots[static_cast<std::size_t>(*step_of(w.timestamp))];
    if (slot) throw Error(ErrorKind::ParseError, fmt::format("weather.csv: duplicate {}", w.timestamp.iso8601()));
    slot = w;
  }
  int run = 0;
  for (Index t = 0; t < steps; ++t) {
    auto& slot = slots[static_cast<std::size_t>(t)];
    const UtcInstant stamp = start.plus_hours(t);
    if (slot) {
      run = 0;
    } else {
      if (++run > options.max_fill_hours) {
        throw Error(ErrorKind::TimelineGap, fmt::format("weather gap longer than {} h at {}", options.max_fill_hours,
                                                        stamp.iso8601()));
      }
      slot = slots[static_cast<std::size_t>(t - 1)];
      slot->timestamp = stamp;
    }
    out.timestamps.push_back(stamp);
    out.weather.push_back(*slot);
  }

  const auto calendar = parse_calendar_csv(read_text(paths.calendar));
  for (const auto& t : out.timestamps) {
    const auto day = std::chrono::sys_days(t.to_local(options.utc_offset_hours).date());
    const auto it = calendar.find(day);
    if (it == calendar.end()) {
      throw Error(ErrorKind::InvalidInput,
                  fmt::format("calendar.csv has no entry for {}", format_date(std::chrono::year_month_day(day))));
    }
    out.calendar.push_back(it->second);
  }

  const auto energy = read_csv(paths.energy);
  const auto c_t = energy.column("timestamp_utc"), c_id = energy.column("building_id"), c_kwh = energy.column("kwh");
  const Index n = static_cast<Index>(out.meta.size());
  RowMatrixXd values = RowMatrixXd::Constant(n, steps, std::nan(""));
  std::set<std::string> energy_ids;
  for (const auto& r : energy.rows) {
    if (!keep(r[c_id])) continue;
    energy_ids.insert(r[c_id]);
    const auto it = index.find(r[c_id]);
    if (it == index.end()) continue;  // reported by the id comparison below
    UtcInstant t;
    try {
      t = UtcInstant::parse(r[c_t]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, fmt::format("energy.csv: {}", e.what()));
    }
    if (t < start || t > out.timestamps.back()) continue;
    if (r[c_kwh].empty()) continue;  // missing reading
    const double v = parse_double(r[c_kwh], fmt::format("energy.csv {} {}", r[c_t], r[c_id]));
    if (v < 0.0) throw Error(ErrorKind::InvalidInput, fmt::format("negative energy for {} at {}", r[c_id], r[c_t]));
    values(it->second, *step_of(t)) = v;
  }
  require_same_ids(ids, energy_ids, "energy");

  for (Index b = 0; b < n; ++b) {
    int gap = 0;
    for (Index t = 0; t < steps; ++t) {
      if (!std::isnan(values(b, t))) {
        gap = 0;
        continue;
      }
      if (t == 0 || ++gap > options.max_fill_hours) {
        throw Error(ErrorKind::TimelineGap, fmt::format("building {}: energy missing for more than {} h at {}",
                                                        out.meta[static_cast<std::size_t>(b)].id,
                                                        options.max_fill_hours, out.timestamps[t].iso8601()));
      }
      values(b, t) = values(b, t - 1);
    }
  }
  out.energy = std::move(values);
  return out;
}

}  // namespace shadowgrid
