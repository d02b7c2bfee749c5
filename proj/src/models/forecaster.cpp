// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/models/forecaster.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>

#include "shadowgrid/dataset/csv.hpp"
#include "shadowgrid/error.hpp"
#include "shadowgrid/models/baselines.hpp"
#include "shadowgrid/models/stgcn.hpp"

namespace shadowgrid {

RowMatrixXd ForecastProblem::actual(std::span<const Index> targets) const {
  RowMatrixXd out(buildings(), static_cast<Index>(targets.size()));
  for (std::size_t i = 0; i < targets.size(); ++i) out.col(static_cast<Index>(i)) = energy.col(targets[i]);
  return out;
}

ForecastProblem make_problem(const Dataset& data, const DependencyGraph& graph, Index window,
                             const SplitFractions& split) {
  ForecastProblem p;
  p.ids = data.ids();
  if (static_cast<Index>(p.ids.size()) != graph.node_count()) {
    throw Error(ErrorKind::GraphMismatch,
                fmt::format("graph has {} nodes, dataset has {} buildings", graph.node_count(), p.ids.size()));
  }
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    if (graph.nodes()[i].id != p.ids[i]) {
      throw Error(ErrorKind::GraphMismatch,
                  fmt::format("graph node {} is '{}', dataset building is '{}'", i, graph.nodes()[i].id, p.ids[i]));
    }
  }
  p.timestamps = data.timestamps;
  p.graph = graph;
  p.energy = data.energy;
  p.windows = make_windows(static_cast<Index>(data.timestamps.size()), window, split);
  p.features = encode_features(data, p.windows.train_steps(), &p.stats);
  p.edge_attributes = edge_attribute_series(graph, data.timestamps);
  return p;
}

const std::vector<std::string>& forecaster_names() {
  static const std::vector<std::string> names{"stgcn", "last_hour", "average12", "linreg", "mlp", "gbt", "gru"};
  return names;
}

namespace {

void check_keys(std::string_view model, const nlohmann::json& config, std::initializer_list<std::string_view> keys) {
  if (config.is_null()) return;
  if (!config.is_object()) throw Error(ErrorKind::InvalidConfig, fmt::format("{}: config must be an object", model));
  for (const auto& [key, value] : config.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorKind::InvalidConfig, fmt::format("{}: unknown key '{}'", model, key));
    }
  }
}

template <typename T>
T get_or(const nlohmann::json& config, const char* key, T fallback) {
  if (config.is_null() || !config.contains(key)) return fallback;
  try {
    return config.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("{}: {}", key, e.what()));
  }
}

Index positive(Index v, const char* what) {
  if (v < 1) throw Error(ErrorKind::InvalidConfig, fmt::format("{} must be >= 1", what));
  return v;
}

}  // namespace

std::unique_ptr<Forecaster> make_forecaster(std::string_view name, const nlohmann::json& config) {
  if (name == "stgcn") return std::make_unique<StgcnForecaster>(StgcnConfig::from_json(config));
  if (name == "last_hour") {
    check_keys(name, config, {});
    return std::make_unique<LastHourForecaster>();
  }
  if (name == "average12") {
    check_keys(name, config, {});
    return std::make_unique<Average12Forecaster>();
  }
  if (name == "linreg") {
    check_keys(name, config, {"ridge"});
    const double ridge = get_or(config, "ridge", 1e-8);
    if (!(ridge >= 0.0)) throw Error(ErrorKind::InvalidConfig, "linreg: ridge must be >= 0");
    return std::make_unique<LinregForecaster>(ridge);
  }
  if (name == "gbt") {
    check_keys(name, config, {"rounds", "depth", "learning_rate"});
    GbtOptions o;
    o.rounds = positive(get_or(config, "rounds", o.rounds), "gbt: rounds");
    o.depth = positive(get_or(config, "depth", o.depth), "gbt: depth");
    o.learning_rate = get_or(config, "learning_rate", o.learning_rate);
    if (!(o.learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "gbt: learning_rate must be > 0");
    return std::make_unique<GbtForecaster>(o);
  }
  if (name == "mlp") {
    check_keys(name, config, {"hidden"});
    return std::make_unique<MlpForecaster>(positive(get_or<Index>(config, "hidden", 32), "mlp: hidden"));
  }
  if (name == "gru") {
    check_keys(name, config, {"hidden"});
    return std::make_unique<GruForecaster>(positive(get_or<Index>(config, "hidden", 16), "gru: hidden"));
  }
  throw Error(ErrorKind::InvalidConfig,
              fmt::format("unknown model '{}' (expected one of: {})", name, fmt::join(forecaster_names(), ", ")));
}

void save_checkpoint(const Forecaster& model, const ForecastProblem& problem, const std::filesystem::path& dir) {
  model.export_parameters().save(dir / "params.json");
  const nlohmann::json sidecar{{"model", model.name()},
                               {"config", model.config()},
                               {"graph_fingerprint", fmt::format("{:016x}", problem.graph.fingerprint())},
                               {"buildings", problem.ids},
                               {"features", problem.features.columns}};
  write_text(dir / "model.json", sidecar.dump(2) + "\n");
}

std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& dir, const ForecastProblem& problem) {
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(read_text(dir / "model.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: {}", (dir / "model.json").string(), e.what()));
  }
  std::string name, fingerprint;
  std::vector<std::string> buildings, features;
  try {
    name = sidecar.at("model").get<std::string>();
    fingerprint = sidecar.at("graph_fingerprint").get<std::string>();
    buildings = sidecar.at("buildings").get<std::vector<std::string>>();
    features = sidecar.at("features").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: {}", (dir / "model.json").string(), e.what()));
  }
  const std::string expected = fmt::format("{:016x}", problem.graph.fingerprint());
  if (fingerprint != expected) {
    throw Error(ErrorKind::GraphMismatch,
                fmt::format("checkpoint was trained on graph {}, current graph is {}", fingerprint, expected));
  }
  if (buildings != problem.ids) throw Error(ErrorKind::GraphMismatch, "checkpoint building ids differ from the dataset");
  if (features != problem.features.columns) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint feature columns differ from the dataset");
  }
  auto model = make_forecaster(name, sidecar.value("config", nlohmann::json::object()));
  model->import_parameters(problem, numerics::ParameterSet::load(dir / "params.json"));
  return model;
}

}  // namespace shadowgrid
