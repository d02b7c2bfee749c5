// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shadowgrid/dataset/features.hpp"
#include "shadowgrid/dataset/windows.hpp"
#include "shadowgrid/graph.hpp"
#include "shadowgrid/numerics/tape.hpp"

namespace shadowgrid {

/// Everything a forecaster sees: encoded features, raw energy, the graph and
/// its edge attributes on the same hourly timeline, and the window split.
/// Nodes of `graph` and rows of `energy` share one order (sorted ids).
struct ForecastProblem {
  std::vector<std::string> ids;
  std::vector<UtcInstant> timestamps;
  DependencyGraph graph;
  FeatureTensor features;
  FeatureStats stats;
  RowMatrixXd energy;
  EdgeAttributeSeries edge_attributes;
  WindowSet windows;

  Index buildings() const { return static_cast<Index>(ids.size()); }
  Index window() const { return windows.window; }
  double normalize(Index b, double kwh) const { return stats.energy[static_cast<std::size_t>(b)].apply(kwh); }
  double denormalize(Index b, double z) const { return stats.energy[static_cast<std::size_t>(b)].invert(z); }
  /// buildings x targets.size() actual kWh.
  RowMatrixXd actual(std::span<const Index> targets) const;
};

/// Throws GraphMismatch when graph node ids differ from the dataset's.
ForecastProblem make_problem(const Dataset& data, const DependencyGraph& graph, Index window,
                             const SplitFractions& split);

struct TrainOptions {
  std::uint64_t seed = 1;
  Index max_epochs = 200;
  Index patience = 10;
  Index batch_size = 32;
  double learning_rate = 1e-3;
  /// Upper bound for per-building parallel training.
  unsigned threads = 1;
};

struct TrainingLogRow {
  Index epoch = 0;
  std::string building;  // "all" for models trained jointly
  double train_loss = 0.0;
  double val_mape = 0.0;  // NaN when there is no validation split
};

class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual std::string name() const = 0;
  /// Hyperparameters written to the checkpoint sidecar.
  virtual nlohmann::json config() const { return nlohmann::json::object(); }

  virtual void fit(const ForecastProblem& problem, const TrainOptions& options, std::vector<TrainingLogRow>& log) = 0;
  /// buildings x targets.size() predictions in kWh.
  virtual RowMatrixXd predict(const ForecastProblem& problem, std::span<const Index> targets) const = 0;

  virtual numerics::ParameterSet export_parameters() const = 0;
  virtual void import_parameters(const ForecastProblem& problem, const numerics::ParameterSet& params) = 0;
};

/// stgcn, last_hour, average12, linreg, mlp, gbt, gru.
const std::vector<std::string>& forecaster_names();
/// `config` holds model hyperparameters; unknown keys raise InvalidConfig.
std::unique_ptr<Forecaster> make_forecaster(std::string_view name, const nlohmann::json& config = {});

/// Writes params.json and model.json (name, config, graph fingerprint,
/// building ids, feature columns) into `dir`.
void save_checkpoint(const Forecaster& model, const ForecastProblem& problem, const std::filesystem::path& dir);
/// Throws GraphMismatch when the sidecar does not describe `problem`.
std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& dir, const ForecastProblem& problem);

}  // namespace shadowgrid
