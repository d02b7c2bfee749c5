// SPDX-License-Identifier: Apache-2.0
// Per-model, per-building accuracy reports and the improvement tables built
// on top of them.
#pragma once

#include <array>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shadowgrid/graph.hpp"
#include "shadowgrid/time.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {

enum class Season { Spring, Summer, Fall, Winter };
inline constexpr std::array<Season, 4> kSeasons = {Season::Spring, Season::Summer, Season::Fall, Season::Winter};
std::string_view to_string(Season s);

/// Meteorological seasons on the local calendar: Mar-May spring, Jun-Aug
/// summer, Sep-Nov fall, Dec-Feb winter.
Season meteorological_season(const UtcInstant& t, double utc_offset_hours);
std::vector<Season> season_map(std::span<const UtcInstant> timestamps, double utc_offset_hours);

/// Predictions of one model, buildings x hours in kWh.
struct ModelPredictions {
  std::string model;
  RowMatrixXd predicted;
};

struct BuildingMetrics {
  std::string id;
  double rmse = 0.0;
  double mape = 0.0;
  Index mape_excluded = 0;
  /// NaN for seasons without hours.
  std::array<double, 4> seasonal_rmse{};
};

struct ModelReport {
  std::string model;
  double rmse = 0.0;
  double mape = 0.0;
  Index mape_excluded = 0;
  /// Population variance of the per-building RMSE values.
  double rmse_variance = 0.0;
  std::vector<BuildingMetrics> buildings;
  /// Pooled over buildings; NaN for seasons without hours.
  std::array<double, 4> seasonal_rmse{};
  /// Buildings whose hourly MAPE is at most the threshold.
  std::vector<std::string> ashrae_pass;

  const BuildingMetrics& building(std::string_view id) const;
};

struct EvalReport {
  std::vector<std::string> buildings;
  std::vector<UtcInstant> timestamps;
  std::vector<Season> seasons;
  double ashrae_threshold = 30.0;
  std::vector<ModelReport> models;

  bool has_model(std::string_view name) const;
  /// Throws InvalidInput for an unknown model.
  const ModelReport& model(std::string_view name) const;
};

/// `actual` and every `predicted` are buildings x hours. Throws ShapeMismatch
/// for misaligned inputs and propagates metric errors.
EvalReport per_building_report(const std::vector<ModelPredictions>& predictions, const RowMatrixXd& actual,
                               const std::vector<std::string>& buildings, const std::vector<UtcInstant>& timestamps,
                               const std::vector<Season>& seasons, double ashrae_threshold = 30.0);

/// Pass iff mape <= threshold (inclusive).
inline bool ashrae_pass(double mape_percent, double threshold_percent = 30.0) {
  return mape_percent <= threshold_percent;
}

struct AshraeResult {
  std::string model;
  std::string building;
  double mape = 0.0;
  bool pass = false;
};
std::vector<AshraeResult> ashrae_check(const ModelReport& report, double threshold_percent = 30.0);

struct ImprovementRow {
  std::string key;
  /// Hours in the season, or nodes with the indegree.
  Index count = 0;
  /// One value per reference model; NaN where undefined.
  std::vector<double> values;
  /// Mean of the defined values.
  double average = 0.0;
};

struct ImprovementTable {
  std::string key_name;
  std::string unit;
  std::string target;
  std::vector<std::string> references;
  std::vector<ImprovementRow> rows;
};

/// Row per season, column per reference m: (RMSE_m(s) - RMSE_target(s)) /
/// RMSE_target(s) as a fraction. Throws EmptySeason when a requested season has
/// no hours.
ImprovementTable seasonal_improvement(const EvalReport& report, std::string_view target,
                                      const std::vector<std::string>& references,
                                      const std::vector<Season>& seasons = {kSeasons.begin(), kSeasons.end()});

enum class IndegreeMetric {
  /// Mean over buildings of MAPE_ref - MAPE_target, in percentage points.
  Points,
  /// Mean over buildings of (MAPE_ref - MAPE_target) / MAPE_ref.
  Relative,
};

/// Buildings grouped by indegree in `graph` (ascending), one column per
/// reference model. Throws UnknownBuilding when the graph lacks a building.
ImprovementTable indegree_improvement(const EvalReport& report, const DependencyGraph& graph,
                                      std::string_view target, const std::vector<std::string>& references,
                                      IndegreeMetric metric = IndegreeMetric::Points);

// --- serialization -------------------------------------------------------

std::string overall_csv(const EvalReport& report);
std::string per_building_csv(const EvalReport& report);
std::string ashrae_csv(const EvalReport& report);
std::string improvement_csv(const ImprovementTable& table);
nlohmann::json report_json(const EvalReport& report, const std::vector<ImprovementTable>& tables = {});

/// Predicted and actual series of one building, one polyline per model.
std::string building_chart_svg(const EvalReport& report, const std::vector<ModelPredictions>& predictions,
                               const RowMatrixXd& actual, Index building);

}  // namespace shadowgrid
