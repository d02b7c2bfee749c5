// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/dataset/features.hpp"

#include <fmt/format.h>

#include "shadowgrid/error.hpp"

namespace shadowgrid {
namespace {

constexpr std::array<std::string_view, 5> kNumericAttributes = {
    "gross_floor_area", "num_floors", "window_wall_ratio", "envelope_area", "internal_space_area"};
constexpr std::array<std::string_view, 4> kWeatherColumns = {"air_temp_c", "rel_humidity_pct", "wind_speed_ms",
                                                            "solar_density_wm2"};

std::array<double, 5> numeric_attributes(const BuildingMeta& m) {
  return {m.gross_floor_area, double(m.num_floors), m.window_wall_ratio, m.envelope_area, m.internal_space_area};
}

std::array<double, 4> weather_values(const WeatherRecord& w) {
  return {w.air_temp_c, w.rel_humidity_pct, w.wind_speed_ms, w.solar_density_wm2};
}

}  // namespace

Index FeatureTensor::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<Index>(i);
  }
  throw Error(ErrorKind::InvalidInput, fmt::format("no feature column '{}'", name));
}

ZScore fit_zscore(const Eigen::Ref<const VectorXd>& values) {
  ZScore z;
  if (values.size() == 0) return z;
  z.mean = values.mean();
  const double var = (values.array() - z.mean).square().mean();
  z.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  return z;
}

std::vector<std::string> feature_columns() {
  std::vector<std::string> cols;
  for (int k = 1; k <= kOccupancyPeriods; ++k) cols.push_back(fmt::format("occupancy_{}", k));
  for (auto n : kThermalMassNames) cols.push_back(fmt::format("thermal_{}", n));
  for (auto n : kCalendarNames) cols.push_back(fmt::format("calendar_{}", n));
  cols.emplace_back("leed");
  for (auto n : kNumericAttributes) cols.emplace_back(n);
  for (auto n : kWeatherColumns) cols.emplace_back(n);
  cols.emplace_back("lag_kwh");
  return cols;
}

FeatureTensor encode_features(const Dataset& data, Index train_steps, FeatureStats* stats) {
  const Index n = data.buildings();
  const Index steps = data.steps();
  if (train_steps < 2 || train_steps > steps) {
    throw Error(ErrorKind::InvalidInput, fmt::format("training span {} outside [2, {}]", train_steps, steps));
  }
  FeatureStats local;
  FeatureStats& st = stats ? *stats : local;
  st = FeatureStats{};

  RowMatrixXd attrs(n, 5);
  for (Index b = 0; b < n; ++b) {
    const auto a = numeric_attributes(data.meta[static_cast<std::size_t>(b)]);
    for (Index k = 0; k < 5; ++k) attrs(b, k) = a[static_cast<std::size_t>(k)];
  }
  for (Index k = 0; k < 5; ++k) st.attributes.push_back(fit_zscore(attrs.col(k)));

  RowMatrixXd weather(steps, 4);
  for (Index t = 0; t < steps; ++t) {
    const auto w = weather_values(data.weather[static_cast<std::size_t>(t)]);
    for (Index k = 0; k < 4; ++k) weather(t, k) = w[static_cast<std::size_t>(k)];
  }
  for (Index k = 0; k < 4; ++k) st.weather.push_back(fit_zscore(weather.col(k).head(train_steps)));
  for (Index b = 0; b < n; ++b) st.energy.push_back(fit_zscore(data.energy.row(b).head(train_steps).transpose()));

  FeatureTensor out;
  out.buildings = n;
  out.steps = steps;
  out.columns = feature_columns();
  out.values = RowMatrixXd::Zero(n * steps, out.features());
  const Index cal0 = kOccupancyPeriods + 3;
  const Index leed = cal0 + 5;
  const Index num0 = leed + 1;
  const Index w0 = num0 + 5;
  const Index lag = w0 + 4;

  for (Index b = 0; b < n; ++b) {
    const auto& m = data.meta[static_cast<std::size_t>(b)];
    Eigen::RowVectorXd fixed = Eigen::RowVectorXd::Zero(out.features());
    fixed(m.occupancy_period - 1) = 1.0;
    fixed(kOccupancyPeriods + static_cast<Index>(m.thermal_mass)) = 1.0;
    fixed(leed) = m.leed ? 1.0 : 0.0;
    for (Index k = 0; k < 5; ++k) fixed(num0 + k) = st.attributes[static_cast<std::size_t>(k)].apply(attrs(b, k));
    const auto& ez = st.energy[static_cast<std::size_t>(b)];
    for (Index t = 0; t < steps; ++t) {
      auto row = out.values.row(b * steps + t);
      row = fixed;
      row(cal0 + static_cast<Index>(data.calendar[static_cast<std::size_t>(t)])) = 1.0;
      for (Index k = 0; k < 4; ++k) row(w0 + k) = st.weather[static_cast<std::size_t>(k)].apply(weather(t, k));
      // Step 0 has no predecessor; it never appears in a window.
      row(lag) = ez.apply(data.energy(b, t > 0 ? t - 1 : 0));
    }
  }
  if (!out.values.allFinite()) throw Error(ErrorKind::NumericFailure, "non-finite feature value");
  return out;
}

}  // namespace shadowgrid
