// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/models/baselines.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "shadowgrid/evaluation/metrics.hpp"
#include "training.hpp"

namespace shadowgrid {

using numerics::ParameterSet;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

namespace {

std::string building_prefix(Index b) { return fmt::format("b{}.", b); }

/// Feature rows of the target hours for one building.
RowMatrixXd target_rows(const ForecastProblem& p, Index building, std::span<const Index> targets) {
  RowMatrixXd x(static_cast<Index>(targets.size()), p.features.features());
  for (std::size_t i = 0; i < targets.size(); ++i) x.row(static_cast<Index>(i)) = p.features.row(building, targets[i]);
  return x;
}

VectorXd normalized_targets(const ForecastProblem& p, Index building, std::span<const Index> targets) {
  VectorXd y(static_cast<Index>(targets.size()));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    y(static_cast<Index>(i)) = p.normalize(building, p.energy(building, targets[i]));
  }
  return y;
}

}  // namespace

RowMatrixXd LastHourForecaster::predict(const ForecastProblem& problem, std::span<const Index> targets) const {
  RowMatrixXd out(problem.buildings(), static_cast<Index>(targets.size()));
  for (Index b = 0; b < problem.buildings(); ++b) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      out(b, static_cast<Index>(i)) = last_hour_predict(problem.energy.row(b).head(targets[i]));
    }
  }
  return out;
}

RowMatrixXd Average12Forecaster::predict(const ForecastProblem& problem, std::span<const Index> targets) const {
  RowMatrixXd out(problem.buildings(), static_cast<Index>(targets.size()));
  for (Index b = 0; b < problem.buildings(); ++b) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      out(b, static_cast<Index>(i)) = average12_predict(problem.energy.row(b).head(targets[i]));
    }
  }
  return out;
}

// --- linear regression -------------------------------------------------------

void LinregForecaster::fit(const ForecastProblem& problem, const TrainOptions&, std::vector<TrainingLogRow>& log) {
  const auto& train = problem.windows.train;
  if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training windows");
  models_.assign(static_cast<std::size_t>(problem.buildings()), {});
  for (Index b = 0; b < problem.buildings(); ++b) {
    const RowMatrixXd x = target_rows(problem, b, train);
    const VectorXd y = normalized_targets(problem, b, train);
    auto& m = models_[static_cast<std::size_t>(b)];
    m.fit(x, y, ridge_);
    const double loss = (m.predict(x) - y).squaredNorm() / double(y.size());
    double val = std::numeric_limits<double>::quiet_NaN();
    if (!problem.windows.val.empty()) {
      const VectorXd z = m.predict(target_rows(problem, b, problem.windows.val));
      VectorXd pred(z.size()), actual(z.size());
      for (Index i = 0; i < z.size(); ++i) {
        pred(i) = problem.denormalize(b, z(i));
        actual(i) = problem.energy(b, problem.windows.val[static_cast<std::size_t>(i)]);
      }
      val = mape(pred, actual).percent;
    }
    log.push_back(TrainingLogRow{1, problem.ids[static_cast<std::size_t>(b)], loss, val});
  }
}

RowMatrixXd LinregForecaster::predict(const ForecastProblem& problem, std::span<const Index> targets) const {
  if (static_cast<Index>(models_.size()) != problem.buildings()) {
    throw Error(ErrorKind::InvalidInput, "linreg model is not trained for this dataset");
  }
  RowMatrixXd out(problem.buildings(), static_cast<Index>(targets.size()));
  for (Index b = 0; b < problem.buildings(); ++b) {
    const VectorXd z = models_[static_cast<std::size_t>(b)].predict(target_rows(problem, b, targets));
    for (Index i = 0; i < z.size(); ++i) out(b, i) = problem.denormalize(b, z(i));
  }
  return out;
}

ParameterSet LinregForecaster::export_parameters() const {
  ParameterSet out;
  for (std::size_t b = 0; b < models_.size(); ++b) {
    const auto& m = models_[b];
    out.add(building_prefix(Index(b)) + "weights", Tensor({m.weights().size()}, m.weights()));
    out.add(building_prefix(Index(b)) + "bias", Tensor::scalar(m.bias()));
  }
  return out;
}

void LinregForecaster::import_parameters(const ForecastProblem& problem, const ParameterSet& params) {
  models_.assign(static_cast<std::size_t>(problem.buildings()), {});
  for (Index b = 0; b < problem.buildings(); ++b) {
    const auto& w = params.get(building_prefix(b) + "weights").value;
    if (w.size() != problem.features.features()) {
      throw Error(ErrorKind::ShapeMismatch, "linreg weights do not match the feature count");
    }
    models_[static_cast<std::size_t>(b)].set(w.flat(), params.get(building_prefix(b) + "bias").value.item());
  }
}

// --- gradient boosting ---------------------------------------------------------

nlohmann::json GbtForecaster::config() const {
  return {{"rounds", options_.rounds}, {"depth", options_.depth}, {"learning_rate", options_.learning_rate}};
}

void GbtForecaster::fit(const ForecastProblem& problem, const TrainOptions& options, std::vector<TrainingLogRow>& log) {
  const auto& train = problem.windows.train;
  if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training windows");
  models_.assign(static_cast<std::size_t>(problem.buildings()), GradientBoosting(options_));
  parallel_for(problem.buildings(), options.threads, [&](Index b) {
    models_[static_cast<std::size_t>(b)].fit(target_rows(problem, b, train), normalized_targets(problem, b, train));
  });
  for (Index b = 0; b < problem.buildings(); ++b) {
    const auto& hist = models_[static_cast<std::size_t>(b)].train_rmse();
    log.push_back(TrainingLogRow{options_.rounds, problem.ids[static_cast<std::size_t>(b)],
                                 hist.back() * hist.back(), std::numeric_limits<double>::quiet_NaN()});
  }
}

RowMatrixXd GbtForecaster::predict(const ForecastProblem& problem, std::span<const Index> targets) const {
  if (static_cast<Index>(models_.size()) != problem.buildings()) {
    throw Error(ErrorKind::InvalidInput, "gbt model is not trained for this dataset");
  }
  RowMatrixXd out(problem.buildings(), static_cast<Index>(targets.size()));
  for (Index b = 0; b < problem.buildings(); ++b) {
    const VectorXd z = models_[static_cast<std::size_t>(b)].predict(target_rows(problem, b, targets));
    for (Index i = 0; i < z.size(); ++i) out(b, i) = problem.denormalize(b, z(i));
  }
  return out;
}

ParameterSet GbtForecaster::export_parameters() const {
  ParameterSet out;
  for (std::size_t b = 0; b < models_.size(); ++b) {
    out.add(building_prefix(Index(b)) + "base", Tensor::scalar(models_[b].base()));
    out.add(building_prefix(Index(b)) + "trees", models_[b].trees_tensor());
  }
  return out;
}

void GbtForecaster::import_parameters(const ForecastProblem& problem, const ParameterSet& params) {
  models_.assign(static_cast<std::size_t>(problem.buildings()), GradientBoosting(options_));
  for (Index b = 0; b < problem.buildings(); ++b) {
    models_[static_cast<std::size_t>(b)].set_trees(params.get(building_prefix(b) + "base").value.item(),
                                                   params.get(building_prefix(b) + "trees").value);
  }
}

// --- per-building networks ----------------------------------------------------------

void PerBuildingNetwork::fit(const ForecastProblem& problem, const TrainOptions& options,
                             std::vector<TrainingLogRow>& log) {
  const auto& train = problem.windows.train;
  if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training windows");
  const Index n = problem.buildings();
  params_.clear();
  params_.resize(static_cast<std::size_t>(n));
  std::vector<std::vector<TrainingLogRow>> logs(static_cast<std::size_t>(n));

  parallel_for(n, options.threads, [&](Index b) {
    auto& params = params_[static_cast<std::size_t>(b)];
    std::mt19937_64 rng(options.seed * 1000003ull + static_cast<std::uint64_t>(b));
    init(params, problem.features.features(), rng);
    const Tensor x_all = inputs(problem, b, train);
    const VectorXd y_all = normalized_targets(problem, b, train);
    const Index row_size = x_all.size() / x_all.dim(0);
    std::vector<Index> order(train.size());
    std::iota(order.begin(), order.end(), Index(0));

    auto epoch = [&](numerics::AdamState& adam) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(options.batch_size)) {
        const auto count = static_cast<Index>(
            std::min<std::size_t>(static_cast<std::size_t>(options.batch_size), order.size() - s));
        numerics::Shape shape = x_all.shape();
        shape[0] = count;
        Tensor xb(shape), yb({count, 1});
        for (Index i = 0; i < count; ++i) {
          const Index src = order[s + static_cast<std::size_t>(i)];
          xb.flat().segment(i * row_size, row_size) = x_all.flat().segment(src * row_size, row_size);
          yb[i] = y_all(src);
        }
        Tape tape;
        const Var loss = numerics::mse(
            forward(tape, [&](const std::string& name) { return tape.parameter(params.get(name)); }, xb),
            tape.constant(yb));
        params.zero_grad();
        tape.backward(loss);
        numerics::adam_step(params, adam);
        total += loss.item() * double(count);
      }
      return total / double(order.size());
    };
    auto validate = [&]() {
      const auto& val = problem.windows.val;
      if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
      const VectorXd z = predict_building(problem, b, val);
      VectorXd pred(z.size()), actual(z.size());
      for (Index i = 0; i < z.size(); ++i) {
        pred(i) = problem.denormalize(b, z(i));
        actual(i) = problem.energy(b, val[static_cast<std::size_t>(i)]);
      }
      return mape(pred, actual).percent;
    };
    fit_with_early_stopping(params, options, epoch, validate, problem.ids[static_cast<std::size_t>(b)],
                            logs[static_cast<std::size_t>(b)]);
  });
  for (auto& l : logs) log.insert(log.end(), l.begin(), l.end());
}

VectorXd PerBuildingNetwork::predict_building(const ForecastProblem& problem, Index building,
                                              std::span<const Index> targets) const {
  const auto& params = params_.at(static_cast<std::size_t>(building));
  Tape tape;
  const Var out = forward(tape, [&](const std::string& name) { return tape.constant(params.get(name).value); },
                          inputs(problem, building, targets));
  return out.value().flat();
}

RowMatrixXd PerBuildingNetwork::predict(const ForecastProblem& problem, std::span<const Index> targets) const {
  if (static_cast<Index>(params_.size()) != problem.buildings()) {
    throw Error(ErrorKind::InvalidInput, fmt::format("{} model is not trained for this dataset", name()));
  }
  RowMatrixXd out(problem.buildings(), static_cast<Index>(targets.size()));
  for (Index b = 0; b < problem.buildings(); ++b) {
    const VectorXd z = predict_building(problem, b, targets);
    for (Index i = 0; i < z.size(); ++i) out(b, i) = problem.denormalize(b, z(i));
  }
  return out;
}

ParameterSet PerBuildingNetwork::export_parameters() const {
  ParameterSet out;
  for (std::size_t b = 0; b < params_.size(); ++b) {
    for (std::size_t i = 0; i < params_[b].size(); ++i) {
      out.add(building_prefix(Index(b)) + params_[b][i].name, params_[b][i].value);
    }
  }
  return out;
}

void PerBuildingNetwork::import_parameters(const ForecastProblem& problem, const ParameterSet& params) {
  params_.clear();
  params_.resize(static_cast<std::size_t>(problem.buildings()));
  for (Index b = 0; b < problem.buildings(); ++b) {
    auto& p = params_[static_cast<std::size_t>(b)];
    std::mt19937_64 rng(0);
    init(p, problem.features.features(), rng);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto& src = params.get(building_prefix(b) + p[i].name).value;
      if (src.shape() != p[i].value.shape()) {
        throw Error(ErrorKind::ShapeMismatch, fmt::format("parameter {} has the wrong shape", p[i].name));
      }
      p[i].value = src;
    }
  }
}

// --- MLP ---------------------------------------------------------------------------

void MlpForecaster::init(ParameterSet& params, Index features, std::mt19937_64& rng) const {
  params.add_glorot("l1.w", {features, hidden_}, features, hidden_, rng);
  params.add_zeros("l1.b", {hidden_});
  params.add_glorot("l2.w", {hidden_, hidden_}, hidden_, hidden_, rng);
  params.add_zeros("l2.b", {hidden_});
  params.add_glorot("out.w", {hidden_, 1}, hidden_, 1, rng);
  params.add_zeros("out.b", {1});
}

Var MlpForecaster::forward(Tape& tape, const Leaf& leaf, const Tensor& inputs) const {
  using namespace numerics;
  Var h = relu(add_bias(linear(tape.constant(inputs), leaf("l1.w")), leaf("l1.b")));
  h = relu(add_bias(linear(h, leaf("l2.w")), leaf("l2.b")));
  return add_bias(linear(h, leaf("out.w")), leaf("out.b"));
}

Tensor MlpForecaster::inputs(const ForecastProblem& problem, Index building, std::span<const Index> targets) const {
  return Tensor::from_matrix(target_rows(problem, building, targets));
}

// --- GRU ---------------------------------------------------------------------------

Var gru_cell(const Var& x, const Var& h, const Var& w_input, const Var& w_hidden, const Var& b_input,
             const Var& b_hidden) {
  using namespace numerics;
  const Index hidden = h.shape().back();
  const Var gi = add_bias(linear(x, w_input), b_input);
  const Var gh = add_bias(linear(h, w_hidden), b_hidden);
  const Var r = sigmoid(slice_last(gi, 0, hidden) + slice_last(gh, 0, hidden));
  const Var z = sigmoid(slice_last(gi, hidden, hidden) + slice_last(gh, hidden, hidden));
  const Var n = tanh(slice_last(gi, 2 * hidden, hidden) + r * slice_last(gh, 2 * hidden, hidden));
  return affine(z, -1.0, 1.0) * n + z * h;
}

void GruForecaster::init(ParameterSet& params, Index features, std::mt19937_64& rng) const {
  params.add_glorot("gru.wi", {features, 3 * hidden_}, features, hidden_, rng);
  params.add_glorot("gru.wh", {hidden_, 3 * hidden_}, hidden_, hidden_, rng);
  params.add_zeros("gru.bi", {3 * hidden_});
  params.add_zeros("gru.bh", {3 * hidden_});
  params.add_glorot("out.w", {hidden_, 1}, hidden_, 1, rng);
  params.add_zeros("out.b", {1});
}

Var GruForecaster::forward(Tape& tape, const Leaf& leaf, const Tensor& inputs) const {
  using namespace numerics;
  const Var x = tape.constant(inputs);
  const Var wi = leaf("gru.wi"), wh = leaf("gru.wh"), bi = leaf("gru.bi"), bh = leaf("gru.bh");
  Var h = tape.constant(Tensor({inputs.dim(0), hidden_}, 0.0));
  for (Index t = 0; t < inputs.dim(1); ++t) h = gru_cell(select_step(x, t), h, wi, wh, bi, bh);
  return add_bias(linear(h, leaf("out.w")), leaf("out.b"));
}

Tensor GruForecaster::inputs(const ForecastProblem& problem, Index building, std::span<const Index> targets) const {
  const Index t_in = problem.window();
  const Index f = problem.features.features();
  Tensor out({static_cast<Index>(targets.size()), t_in, f});
  auto m = out.matrix();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Index first = targets[i] - t_in + 1;
    if (first < 0) throw Error(ErrorKind::WindowTooShort, "gru window leaves the timeline");
    for (Index tau = 0; tau < t_in; ++tau) m.row(static_cast<Index>(i) * t_in + tau) = problem.features.row(building, first + tau);
  }
  return out;
}

}  // namespace shadowgrid
