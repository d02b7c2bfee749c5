// SPDX-License-Identifier: Apache-2.0
// The `shadowgrid` command line: build-graph, synth, train and eval.
#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "shadowgrid/dataset/windows.hpp"
#include "shadowgrid/error.hpp"
#include "shadowgrid/evaluation/report.hpp"
#include "shadowgrid/models/forecaster.hpp"

namespace shadowgrid {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitIo = 2, kExitValidation = 3, kExitNumeric = 4 };

int exit_code_for(ErrorKind kind);

/// Settings shared by every subcommand, read from `--config`. Every key is
/// optional; unknown keys raise InvalidConfig.
///
///   exclusions        building ids dropped at ingest
///   split             {"train", "val", "test"} fractions
///   window            input hours per window
///   utc_offset_hours  local calendar offset (also used for synth output)
///   floor_height_m    storey height for footprints without a height
///   synth             SynthConfig keys
///   models            {"<model>": hyperparameters}
///   training          {"max_epochs", "patience", "batch_size", "learning_rate"}
///   ashrae_threshold  percent
///   indegree_metric   "points" or "relative"
///   charts            write per-building SVG charts
struct RunConfig {
  std::vector<std::string> exclusions;
  SplitFractions split;
  Index window = 12;
  double utc_offset_hours = -5.0;
  double floor_height_m = kDefaultFloorHeightM;
  nlohmann::json synth = nlohmann::json::object();
  std::map<std::string, nlohmann::json> models;
  TrainOptions training;
  double ashrae_threshold = 30.0;
  IndegreeMetric indegree_metric = IndegreeMetric::Points;
  bool charts = true;

  static RunConfig from_json(const nlohmann::json& j);
  /// Throws IoError / InvalidConfig.
  static RunConfig load(const std::filesystem::path& path);

  /// Hyperparameters for `model`, with the stgcn window tied to `window`.
  nlohmann::json model_config(const std::string& model) const;
};

/// Threads from SHADOWGRID_THREADS, else the hardware concurrency. Throws
/// InvalidConfig for a malformed value.
unsigned thread_budget();

/// Long form `timestamp_utc,building_id,model,kwh` over `targets`.
std::string predictions_to_csv(const ForecastProblem& problem, std::span<const Index> targets,
                               const std::vector<ModelPredictions>& predictions);
/// Inverse of predictions_to_csv; every (timestamp, building) of `targets`
/// must be present exactly once per model (ShapeMismatch otherwise).
std::vector<ModelPredictions> predictions_from_csv(const ForecastProblem& problem, std::span<const Index> targets,
                                                   std::string_view text);

/// Runs one command line. Output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shadowgrid
