// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/evaluation/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "shadowgrid/error.hpp"
#include "shadowgrid/evaluation/metrics.hpp"

namespace shadowgrid {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string number(double v) { return std::isnan(v) ? std::string() : fmt::format("{:.6f}", v); }

nlohmann::json json_number(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

std::size_t season_index(Season s) { return static_cast<std::size_t>(s); }

double mean_defined(const std::vector<double>& values) {
  double total = 0.0;
  int count = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    total += v;
    ++count;
  }
  return count == 0 ? kNaN : total / count;
}

}  // namespace

std::string_view to_string(Season s) {
  static constexpr std::array<std::string_view, 4> names = {"spring", "summer", "fall", "winter"};
  return names[season_index(s)];
}

Season meteorological_season(const UtcInstant& t, double utc_offset_hours) {
  const unsigned m = unsigned(t.to_local(utc_offset_hours).date().month());
  if (m >= 3 && m <= 5) return Season::Spring;
  if (m >= 6 && m <= 8) return Season::Summer;
  if (m >= 9 && m <= 11) return Season::Fall;
  return Season::Winter;
}

std::vector<Season> season_map(std::span<const UtcInstant> timestamps, double utc_offset_hours) {
  std::vector<Season> out;
  out.reserve(timestamps.size());
  for (const auto& t : timestamps) out.push_back(meteorological_season(t, utc_offset_hours));
  return out;
}

const BuildingMetrics& ModelReport::building(std::string_view id) const {
  for (const auto& b : buildings) {
    if (b.id == id) return b;
  }
  throw Error(ErrorKind::UnknownBuilding, fmt::format("{}: no building '{}'", model, id));
}

bool EvalReport::has_model(std::string_view name) const {
  return std::any_of(models.begin(), models.end(), [&](const auto& m) { return m.model == name; });
}

const ModelReport& EvalReport::model(std::string_view name) const {
  for (const auto& m : models) {
    if (m.model == name) return m;
  }
  throw Error(ErrorKind::InvalidInput, fmt::format("report has no model '{}'", name));
}

EvalReport per_building_report(const std::vector<ModelPredictions>& predictions, const RowMatrixXd& actual,
                               const std::vector<std::string>& buildings, const std::vector<UtcInstant>& timestamps,
                               const std::vector<Season>& seasons, double ashrae_threshold) {
  const Index n = actual.rows(), hours = actual.cols();
  if (static_cast<Index>(buildings.size()) != n || static_cast<Index>(timestamps.size()) != hours ||
      static_cast<Index>(seasons.size()) != hours) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("report inputs disagree: {} x {} actuals, {} ids, {} timestamps, {} seasons", n, hours,
                            buildings.size(), timestamps.size(), seasons.size()));
  }
  if ((actual.array() < 0.0).any()) throw Error(ErrorKind::InvalidInput, "actual consumption must be >= 0");

  EvalReport report;
  report.buildings = buildings;
  report.timestamps = timestamps;
  report.seasons = seasons;
  report.ashrae_threshold = ashrae_threshold;

  std::array<std::vector<Index>, 4> season_hours;
  for (Index t = 0; t < hours; ++t) season_hours[season_index(seasons[static_cast<std::size_t>(t)])].push_back(t);

  for (const auto& p : predictions) {
    if (p.predicted.rows() != n || p.predicted.cols() != hours) {
      throw Error(ErrorKind::ShapeMismatch, fmt::format("{}: predictions are {} x {}, actuals {} x {}", p.model,
                                                        p.predicted.rows(), p.predicted.cols(), n, hours));
    }
    if (!p.predicted.allFinite()) throw Error(ErrorKind::NumericFailure, fmt::format("{}: non-finite predictions", p.model));
    ModelReport m;
    m.model = p.model;
    m.rmse = rmse(p.predicted, actual);
    const auto overall = mape(p.predicted, actual);
    m.mape = overall.percent;
    m.mape_excluded = overall.excluded;
    VectorXd per_rmse(n);
    for (Index b = 0; b < n; ++b) {
      BuildingMetrics bm;
      bm.id = buildings[static_cast<std::size_t>(b)];
      bm.rmse = rmse(p.predicted.row(b), actual.row(b));
      const auto bmape = mape(p.predicted.row(b), actual.row(b));
      bm.mape = bmape.percent;
      bm.mape_excluded = bmape.excluded;
      for (Season s : kSeasons) {
        const auto& idx = season_hours[season_index(s)];
        if (idx.empty()) {
          bm.seasonal_rmse[season_index(s)] = kNaN;
          continue;
        }
        VectorXd pp(static_cast<Index>(idx.size())), aa(static_cast<Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
          pp(static_cast<Index>(i)) = p.predicted(b, idx[i]);
          aa(static_cast<Index>(i)) = actual(b, idx[i]);
        }
        bm.seasonal_rmse[season_index(s)] = rmse(pp, aa);
      }
      per_rmse(b) = bm.rmse;
      if (ashrae_pass(bm.mape, ashrae_threshold)) m.ashrae_pass.push_back(bm.id);
      m.buildings.push_back(std::move(bm));
    }
    m.rmse_variance = population_variance(per_rmse);
    for (Season s : kSeasons) {
      const auto& idx = season_hours[season_index(s)];
      if (idx.empty()) {
        m.seasonal_rmse[season_index(s)] = kNaN;
        continue;
      }
      RowMatrixXd pp(n, static_cast<Index>(idx.size())), aa(n, static_cast<Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        pp.col(static_cast<Index>(i)) = p.predicted.col(idx[i]);
        aa.col(static_cast<Index>(i)) = actual.col(idx[i]);
      }
      m.seasonal_rmse[season_index(s)] = rmse(pp, aa);
    }
    report.models.push_back(std::move(m));
  }
  return report;
}

std::vector<AshraeResult> ashrae_check(const ModelReport& report, double threshold_percent) {
  std::vector<AshraeResult> out;
  for (const auto& b : report.buildings) {
    out.push_back(AshraeResult{report.model, b.id, b.mape, ashrae_pass(b.mape, threshold_percent)});
  }
  return out;
}

ImprovementTable seasonal_improvement(const EvalReport& report, std::string_view target,
                                      const std::vector<std::string>& references,
                                      const std::vector<Season>& seasons) {
  const auto& base = report.model(target);
  ImprovementTable table;
  table.key_name = "season";
  table.unit = "fraction";
  table.target = std::string(target);
  table.references = references;
  for (Season s : seasons) {
    const auto hours = std::count(report.seasons.begin(), report.seasons.end(), s);
    if (hours == 0) throw Error(ErrorKind::EmptySeason, fmt::format("no evaluation hours in {}", to_string(s)));
    ImprovementRow row;
    row.key = std::string(to_string(s));
    row.count = static_cast<Index>(hours);
    const double denom = base.seasonal_rmse[season_index(s)];
    for (const auto& ref : references) {
      const double r = report.model(ref).seasonal_rmse[season_index(s)];
      row.values.push_back(denom > 0.0 ? (r - denom) / denom : kNaN);
    }
    row.average = mean_defined(row.values);
    table.rows.push_back(std::move(row));
  }
  return table;
}

ImprovementTable indegree_improvement(const EvalReport& report, const DependencyGraph& graph,
                                      std::string_view target, const std::vector<std::string>& references,
                                      IndegreeMetric metric) {
  const auto& base = report.model(target);
  std::map<Index, std::vector<std::string>> groups;
  for (const auto& id : report.buildings) groups[indegree(graph, id)].push_back(id);

  ImprovementTable table;
  table.key_name = "indegree";
  table.unit = metric == IndegreeMetric::Points ? "percentage_points" : "fraction";
  table.target = std::string(target);
  table.references = references;
  for (const auto& [degree, ids] : groups) {
    ImprovementRow row;
    row.key = std::to_string(degree);
    row.count = static_cast<Index>(ids.size());
    for (const auto& ref : references) {
      const auto& other = report.model(ref);
      std::vector<double> diffs;
      for (const auto& id : ids) {
        const double m_ref = other.building(id).mape, m_target = base.building(id).mape;
        if (metric == IndegreeMetric::Points) {
          diffs.push_back(m_ref - m_target);
        } else {
          diffs.push_back(m_ref > 0.0 ? (m_ref - m_target) / m_ref : kNaN);
        }
      }
      row.values.push_back(mean_defined(diffs));
    }
    row.average = mean_defined(row.values);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string overall_csv(const EvalReport& report) {
  std::string out = "model,rmse_kwh,mape_pct,mape_excluded_hours,rmse_variance,ashrae_pass,buildings\n";
  for (const auto& m : report.models) {
    out += fmt::format("{},{},{},{},{},{},{}\n", m.model, number(m.rmse), number(m.mape), m.mape_excluded,
                       number(m.rmse_variance), m.ashrae_pass.size(), m.buildings.size());
  }
  return out;
}

std::string per_building_csv(const EvalReport& report) {
  std::string out =
      "model,building_id,rmse_kwh,mape_pct,mape_excluded_hours,rmse_spring,rmse_summer,rmse_fall,rmse_winter\n";
  for (const auto& m : report.models) {
    for (const auto& b : m.buildings) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", m.model, b.id, number(b.rmse), number(b.mape),
                         b.mape_excluded, number(b.seasonal_rmse[0]), number(b.seasonal_rmse[1]),
                         number(b.seasonal_rmse[2]), number(b.seasonal_rmse[3]));
    }
  }
  return out;
}

std::string ashrae_csv(const EvalReport& report) {
  std::string out = "model,building_id,mape_pct,threshold_pct,pass\n";
  for (const auto& m : report.models) {
    for (const auto& r : ashrae_check(m, report.ashrae_threshold)) {
      out += fmt::format("{},{},{},{},{}\n", r.model, r.building, number(r.mape), number(report.ashrae_threshold),
                         r.pass ? 1 : 0);
    }
  }
  return out;
}

std::string improvement_csv(const ImprovementTable& table) {
  std::string out = table.key_name + ",count";
  for (const auto& r : table.references) out += "," + r;
  out += ",average\n";
  for (const auto& row : table.rows) {
    out += row.key + "," + std::to_string(row.count);
    for (double v : row.values) out += "," + number(v);
    out += "," + number(row.average) + "\n";
  }
  return out;
}

nlohmann::json report_json(const EvalReport& report, const std::vector<ImprovementTable>& tables) {
  nlohmann::json j;
  j["buildings"] = report.buildings;
  j["hours"] = report.timestamps.size();
  j["first_hour"] = report.timestamps.empty() ? "" : report.timestamps.front().iso8601();
  j["last_hour"] = report.timestamps.empty() ? "" : report.timestamps.back().iso8601();
  j["ashrae_threshold_pct"] = report.ashrae_threshold;
  j["models"] = nlohmann::json::array();
  for (const auto& m : report.models) {
    nlohmann::json jm{{"model", m.model},
                      {"rmse_kwh", m.rmse},
                      {"mape_pct", m.mape},
                      {"mape_excluded_hours", m.mape_excluded},
                      {"rmse_variance", m.rmse_variance},
                      {"ashrae_pass", m.ashrae_pass}};
    for (Season s : kSeasons) jm["seasonal_rmse"][std::string(to_string(s))] = json_number(m.seasonal_rmse[season_index(s)]);
    jm["buildings"] = nlohmann::json::array();
    for (const auto& b : m.buildings) {
      jm["buildings"].push_back(
          {{"id", b.id}, {"rmse_kwh", b.rmse}, {"mape_pct", b.mape}, {"mape_excluded_hours", b.mape_excluded}});
    }
    j["models"].push_back(std::move(jm));
  }
  j["improvement"] = nlohmann::json::array();
  for (const auto& t : tables) {
    nlohmann::json jt{{"key", t.key_name}, {"unit", t.unit}, {"target", t.target}, {"references", t.references}};
    jt["rows"] = nlohmann::json::array();
    for (const auto& row : t.rows) {
      nlohmann::json values = nlohmann::json::array();
      for (double v : row.values) values.push_back(json_number(v));
      jt["rows"].push_back({{"key", row.key}, {"count", row.count}, {"values", values}, {"average", json_number(row.average)}});
    }
    j["improvement"].push_back(std::move(jt));
  }
  return j;
}

std::string building_chart_svg(const EvalReport& report, const std::vector<ModelPredictions>& predictions,
                               const RowMatrixXd& actual, Index building) {
  static constexpr std::array<std::string_view, 8> palette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  constexpr double width = 960, height = 360, left = 60, right = 150, top = 30, bottom = 40;
  const Index hours = actual.cols();
  double lo = actual.row(building).minCoeff(), hi = actual.row(building).maxCoeff();
  for (const auto& p : predictions) {
    lo = std::min(lo, p.predicted.row(building).minCoeff());
    hi = std::max(hi, p.predicted.row(building).maxCoeff());
  }
  if (hi <= lo) hi = lo + 1.0;
  const auto x = [&](Index t) { return left + (width - left - right) * (hours > 1 ? double(t) / double(hours - 1) : 0.0); };
  const auto y = [&](double v) { return top + (height - top - bottom) * (1.0 - (v - lo) / (hi - lo)); };
  const auto polyline = [&](const auto& row, std::string_view colour, double stroke) {
    std::string pts;
    for (Index t = 0; t < hours; ++t) pts += fmt::format("{}{:.1f},{:.1f}", t ? " " : "", x(t), y(row(t)));
    return fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" points=\"{}\"/>\n", colour, stroke,
                       pts);
  };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{}: predicted vs actual (kWh)</text>\n",
      width, height, width, height, left, report.buildings[static_cast<std::size_t>(building)]);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, height - bottom);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, height - bottom,
                     width - right);
  svg += fmt::format("<text x=\"5\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\">{:.1f}</text>\n", y(hi) + 4, hi);
  svg += fmt::format("<text x=\"5\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\">{:.1f}</text>\n", y(lo) + 4, lo);
  if (hours > 0) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n", left,
                       height - 10, report.timestamps.front().iso8601());
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"end\">{}</text>\n",
                       width - right, height - 10, report.timestamps.back().iso8601());
  }
  svg += polyline(actual.row(building), "black", 1.5);
  double legend_y = top + 10;
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">actual</text>\n",
                     width - right + 10, legend_y);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto colour = palette[i % palette.size()];
    svg += polyline(predictions[i].predicted.row(building), colour, 1.0);
    legend_y += 16;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                       width - right + 10, legend_y, colour, predictions[i].model);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace shadowgrid
