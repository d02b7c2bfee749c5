// SPDX-License-Identifier: Apache-2.0
// Reference forecasters: persistence, moving average, per-building linear
// regression, MLP, gradient-boosted trees and GRU.
#pragma once

#include <fmt/format.h>

#include <functional>
#include <vector>

#include "shadowgrid/error.hpp"
#include "shadowgrid/models/forecaster.hpp"
#include "shadowgrid/numerics/ops.hpp"

namespace shadowgrid {

/// Consumption of the last available hour.
template <typename Derived>
typename Derived::Scalar last_hour_predict(const Eigen::MatrixBase<Derived>& history) {
  if (history.size() == 0) throw Error(ErrorKind::EmptyHistory, "last_hour needs one hour of history");
  return history.derived().reshaped()(history.size() - 1);
}

/// Mean of the trailing 12 hours.
template <typename Derived>
typename Derived::Scalar average12_predict(const Eigen::MatrixBase<Derived>& history) {
  if (history.size() < 12) {
    throw Error(ErrorKind::InsufficientHistory, fmt::format("average12 needs 12 hours, got {}", history.size()));
  }
  const auto tail = history.derived().reshaped().tail(12);
  typename Derived::Scalar sum(0);
  for (Index i = 0; i < 12; ++i) sum += tail(i);
  return sum / typename Derived::Scalar(12);
}

/// Least squares on centred data: (Xc^T Xc + ridge I) w = Xc^T yc, b = mean(y) -
/// mean(X) w. Constant columns are left out and get weight zero. With ridge 0 a
/// rank-deficient system raises SingularSystem.
class LinearRegression {
 public:
  void fit(const Eigen::Ref<const RowMatrixXd>& x, const Eigen::Ref<const VectorXd>& y, double ridge = 1e-8);
  VectorXd predict(const Eigen::Ref<const RowMatrixXd>& x) const;

  const VectorXd& weights() const { return weights_; }
  double bias() const { return bias_; }
  void set(VectorXd weights, double bias) {
    weights_ = std::move(weights);
    bias_ = bias;
  }

 private:
  VectorXd weights_;
  double bias_ = 0.0;
};

struct GbtOptions {
  Index rounds = 200;
  Index depth = 3;
  double learning_rate = 0.1;
};

/// Squared-loss gradient boosting over depth-limited variance-reduction trees.
/// Trees are complete binary arrays: node k has children 2k+1 and 2k+2; each
/// node is (feature, threshold, value, is_leaf) and x[feature] <= threshold
/// goes left.
class GradientBoosting {
 public:
  explicit GradientBoosting(GbtOptions options = {}) : options_(options) {}

  /// Throws EmptyTrainingSet.
  void fit(const Eigen::Ref<const RowMatrixXd>& x, const Eigen::Ref<const VectorXd>& y);
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  VectorXd predict(const Eigen::Ref<const RowMatrixXd>& x) const;

  const GbtOptions& options() const { return options_; }
  double base() const { return base_; }
  /// Training RMSE of the base prediction followed by one entry per round.
  const std::vector<double>& train_rmse() const { return train_rmse_; }

  Index nodes_per_tree() const { return (Index(1) << (options_.depth + 1)) - 1; }
  /// [rounds, nodes, 4].
  numerics::Tensor trees_tensor() const;
  void set_trees(double base, const numerics::Tensor& trees);

 private:
  GbtOptions options_;
  double base_ = 0.0;
  std::vector<RowMatrixXd> trees_;  // nodes x 4
  std::vector<double> train_rmse_;
};

class LastHourForecaster final : public Forecaster {
 public:
  std::string name() const override { return "last_hour"; }
  void fit(const ForecastProblem&, const TrainOptions&, std::vector<TrainingLogRow>&) override {}
  RowMatrixXd predict(const ForecastProblem& problem, std::span<const Index> targets) const override;
  numerics::ParameterSet export_parameters() const override { return {}; }
  void import_parameters(const ForecastProblem&, const numerics::ParameterSet&) override {}
};

class Average12Forecaster final : public Forecaster {
 public:
  std::string name() const override { return "average12"; }
  void fit(const ForecastProblem&, const TrainOptions&, std::vector<TrainingLogRow>&) override {}
  RowMatrixXd predict(const ForecastProblem& problem, std::span<const Index> targets) const override;
  numerics::ParameterSet export_parameters() const override { return {}; }
  void import_parameters(const ForecastProblem&, const numerics::ParameterSet&) override {}
};

/// One regression per building on the feature row of the target hour.
class LinregForecaster final : public Forecaster {
 public:
  explicit LinregForecaster(double ridge = 1e-8) : ridge_(ridge) {}
  std::string name() const override { return "linreg"; }
  nlohmann::json config() const override { return {{"ridge", ridge_}}; }
  void fit(const ForecastProblem& problem, const TrainOptions& options, std::vector<TrainingLogRow>& log) override;
  RowMatrixXd predict(const ForecastProblem& problem, std::span<const Index> targets) const override;
  numerics::ParameterSet export_parameters() const override;
  void import_parameters(const ForecastProblem& problem, const numerics::ParameterSet& params) override;

 private:
  double ridge_;
  std::vector<LinearRegression> models_;
};

class GbtForecaster final : public Forecaster {
 public:
  explicit GbtForecaster(GbtOptions options = {}) : options_(options) {}
  std::string name() const override { return "gbt"; }
  nlohmann::json config() const override;
  void fit(const ForecastProblem& problem, const TrainOptions& options, std::vector<TrainingLogRow>& log) override;
  RowMatrixXd predict(const ForecastProblem& problem, std::span<const Index> targets) const override;
  numerics::ParameterSet export_parameters() const override;
  void import_parameters(const ForecastProblem& problem, const numerics::ParameterSet& params) override;

  const std::vector<GradientBoosting>& models() const { return models_; }

 private:
  GbtOptions options_;
  std::vector<GradientBoosting> models_;
};

/// Shared machinery for networks trained separately for every building.
class PerBuildingNetwork : public Forecaster {
 public:
  void fit(const ForecastProblem& problem, const TrainOptions& options, std::vector<TrainingLogRow>& log) override;
  RowMatrixXd predict(const ForecastProblem& problem, std::span<const Index> targets) const override;
  numerics::ParameterSet export_parameters() const override;
  void import_parameters(const ForecastProblem& problem, const numerics::ParameterSet& params) override;

  using Leaf = std::function<numerics::Var(const std::string&)>;
  /// [B, 1] normalized predictions for a batch of inputs.
  virtual numerics::Var forward(numerics::Tape& tape, const Leaf& leaf, const numerics::Tensor& inputs) const = 0;
  virtual numerics::Tensor inputs(const ForecastProblem& problem, Index building,
                                  std::span<const Index> targets) const = 0;
  virtual void init(numerics::ParameterSet& params, Index features, std::mt19937_64& rng) const = 0;

  /// Normalized predictions of one building.
  VectorXd predict_building(const ForecastProblem& problem, Index building, std::span<const Index> targets) const;
  numerics::ParameterSet& parameters(Index building) { return params_[static_cast<std::size_t>(building)]; }

 protected:
  std::vector<numerics::ParameterSet> params_;
};

/// Two Linear+ReLU blocks on the feature row of the target hour, then a
/// linear output unit.
class MlpForecaster final : public PerBuildingNetwork {
 public:
  explicit MlpForecaster(Index hidden = 32) : hidden_(hidden) {}
  std::string name() const override { return "mlp"; }
  nlohmann::json config() const override { return {{"hidden", hidden_}}; }
  numerics::Var forward(numerics::Tape& tape, const Leaf& leaf, const numerics::Tensor& inputs) const override;
  numerics::Tensor inputs(const ForecastProblem& problem, Index building,
                          std::span<const Index> targets) const override;
  void init(numerics::ParameterSet& params, Index features, std::mt19937_64& rng) const override;

 private:
  Index hidden_;
};

/// GRU over the input window (gates ordered reset, update, candidate; PyTorch
/// equations), last hidden state through a linear unit.
class GruForecaster final : public PerBuildingNetwork {
 public:
  explicit GruForecaster(Index hidden = 16) : hidden_(hidden) {}
  std::string name() const override { return "gru"; }
  nlohmann::json config() const override { return {{"hidden", hidden_}}; }
  numerics::Var forward(numerics::Tape& tape, const Leaf& leaf, const numerics::Tensor& inputs) const override;
  numerics::Tensor inputs(const ForecastProblem& problem, Index building,
                          std::span<const Index> targets) const override;
  void init(numerics::ParameterSet& params, Index features, std::mt19937_64& rng) const override;

 private:
  Index hidden_;
};

/// h' = (1 - z) * n + z * h for one step; x [B, F], h [B, H].
numerics::Var gru_cell(const numerics::Var& x, const numerics::Var& h, const numerics::Var& w_input,
                       const numerics::Var& w_hidden, const numerics::Var& b_input, const numerics::Var& b_hidden);

}  // namespace shadowgrid
