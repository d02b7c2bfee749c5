// SPDX-License-Identifier: Apache-2.0
// Synthetic campus with a known shading term in the energy series.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "shadowgrid/dataset/dataset.hpp"
#include "shadowgrid/graph.hpp"

namespace shadowgrid {

struct SynthConfig {
  Index buildings = 12;
  Index hours = 4380;
  std::string start = "2016-01-01T05:00:00Z";
  double utc_offset_hours = -5.0;
  GeoPoint origin{33.7490, -84.3880};

  double grid_spacing_m = 60.0;
  double mean_height_m = 15.0;
  double jitter_m = 8.0;

  /// Coupling strength kappa (>= 0) and its unit scale: the shading relief on
  /// building b is kappa * coupling_scale * base_b * sum of per-edge terms.
  double kappa = 1.0;
  double coupling_scale = 0.3;
  double decay_length_m = 50.0;
  /// Modulates the coupling by 0.15 + 0.85 |cos(2 pi (doy - 172) / 365.25)|.
  bool seasonal = false;

  /// Hourly noise as a fraction of the base load.
  double noise = 0.03;

  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys raise InvalidConfig.
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthCity {
  Dataset data;
  Calendar calendar;
  DependencyGraph graph;
  /// buildings x steps, kWh removed by shading (>= 0).
  RowMatrixXd coupling;
};

/// Occupancy scale per calendar category.
double occupancy_factor(CalendarCategory c);
/// Category of a local calendar day.
CalendarCategory campus_calendar_category(const std::chrono::year_month_day& day);
/// Seasonal amplitude of the coupling for a UTC instant.
double seasonal_modulation(const UtcInstant& t);

SynthCity synth_generate(const SynthConfig& config, std::uint64_t seed);

/// The five canonical dataset files plus coupling_audit.csv
/// (`timestamp_utc,building_id,coupling_kwh`).
void write_synth(const SynthCity& city, const std::filesystem::path& dir);

}  // namespace shadowgrid
