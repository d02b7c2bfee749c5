// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "shadowgrid/models/forecaster.hpp"
#include "shadowgrid/models/graph_conv.hpp"
#include "shadowgrid/numerics/ops.hpp"

namespace shadowgrid {

struct StgcnConfig {
  Index blocks = 2;
  Index kernel = 3;
  Index channels = 16;
  Index edge_hidden = 16;
  Index window = 12;
  /// Feed the four edge attributes to the edge MLP next to the node features.
  bool edge_attributes = true;
  /// When false every spatial step is the identity (ablation).
  bool spatial = true;

  /// Temporal extent left after the blocks.
  Index remaining_steps() const { return window - blocks * 2 * (kernel - 1); }
  /// Throws InvalidConfig (WindowTooShort when the blocks exhaust the window).
  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys raise InvalidConfig.
  static StgcnConfig from_json(const nlohmann::json& j);
};

/// Inputs for a batch of windows over a graph with N nodes and E edges.
struct StgcnBatch {
  Index windows = 0;
  numerics::Tensor x;           // [B * N, T, F], window-major
  numerics::Tensor edge_input;  // [B * T * E, 2F (+4)], rows (b * T + tau) * E + e
};

/// Window b covers feature rows targets[b] - T + 1 .. targets[b].
StgcnBatch make_stgcn_batch(const DependencyGraph& g, const FeatureTensor& features,
                            const EdgeAttributeSeries& attrs, std::span<const Index> targets,
                            const StgcnConfig& config);

/// Stacked ST-Conv blocks with a learned, per-step adjacency and a temporal
/// collapse head.
class StgcnNetwork {
 public:
  StgcnNetwork(const StgcnConfig& config, Index features, const DependencyGraph& g, std::uint64_t seed);

  const StgcnConfig& config() const { return config_; }
  numerics::ParameterSet& parameters() { return params_; }
  const numerics::ParameterSet& parameters() const { return params_; }

  /// Trainable forward pass: [B * N, 1] normalized predictions.
  numerics::Var forward(numerics::Tape& tape, const StgcnBatch& batch);
  /// Inference: B x N normalized predictions.
  RowMatrixXd predict(const StgcnBatch& batch) const;
  /// Normalized adjacency for every (window, step): [B * T, N, N].
  numerics::Tensor adjacency(const StgcnBatch& batch) const;

  EdgeMlpWeights edge_mlp_weights() const;

 private:
  template <typename Leaf>
  numerics::Var forward_impl(numerics::Tape& tape, const StgcnBatch& batch, Leaf&& leaf) const;
  template <typename Leaf>
  numerics::Var operators(numerics::Tape& tape, const StgcnBatch& batch, Leaf&& leaf) const;

  StgcnConfig config_;
  Index features_;
  Index nodes_;
  std::vector<Index> dst_;
  std::vector<Index> src_;
  numerics::ParameterSet params_;
};

/// ST-Conv block on the tape: GLU temporal conv, spatial mixing with the
/// operator of each step's last input row plus ReLU(. W), GLU temporal conv.
/// `operators` may be an invalid Var to skip mixing.
numerics::Var st_conv_block(const numerics::Var& x, const numerics::Var& operators, const numerics::Var& kernel1,
                            const numerics::Var& bias1, const numerics::Var& graph_weight,
                            const numerics::Var& kernel2, const numerics::Var& bias2, Index nodes, Index stride,
                            Index offset);

class StgcnForecaster final : public Forecaster {
 public:
  explicit StgcnForecaster(StgcnConfig config = {}) : config_(config) { config_.validate(); }

  std::string name() const override { return "stgcn"; }
  nlohmann::json config() const override { return config_.to_json(); }
  void fit(const ForecastProblem& problem, const TrainOptions& options, std::vector<TrainingLogRow>& log) override;
  RowMatrixXd predict(const ForecastProblem& problem, std::span<const Index> targets) const override;
  numerics::ParameterSet export_parameters() const override;
  void import_parameters(const ForecastProblem& problem, const numerics::ParameterSet& params) override;

  const StgcnNetwork* network() const { return network_.get(); }

 private:
  StgcnConfig config_;
  std::unique_ptr<StgcnNetwork> network_;
};

}  // namespace shadowgrid
