// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "shadowgrid/dataset/dataset.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {

/// Buildings x steps x features, stored as (buildings * steps) rows with row
/// b * steps + t.
struct FeatureTensor {
  Index buildings = 0;
  Index steps = 0;
  std::vector<std::string> columns;
  RowMatrixXd values;

  Index features() const { return static_cast<Index>(columns.size()); }
  /// Throws InvalidInput for an unknown name.
  Index column(std::string_view name) const;
  auto row(Index building, Index step) const { return values.row(building * steps + step); }
};

struct ZScore {
  double mean = 0.0;
  double scale = 1.0;  // population standard deviation; 1 for constant columns

  double apply(double v) const { return (v - mean) / scale; }
  double invert(double z) const { return z * scale + mean; }
};

/// Population mean and standard deviation of `values`.
ZScore fit_zscore(const Eigen::Ref<const VectorXd>& values);

struct FeatureStats {
  std::vector<ZScore> attributes;  // across buildings
  std::vector<ZScore> weather;     // over the training span
  std::vector<ZScore> energy;      // per building over the training span
};

/// Column order: occupancy_1..6, thermal_light/medium/high, calendar one-hot in
/// kCalendarNames order, leed, five numeric attributes, four weather columns,
/// lag_kwh (energy at t-1, z-scored per building). Statistics use steps
/// [0, train_steps) only.
FeatureTensor encode_features(const Dataset& data, Index train_steps, FeatureStats* stats = nullptr);

std::vector<std::string> feature_columns();

}  // namespace shadowgrid
