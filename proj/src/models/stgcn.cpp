// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/models/stgcn.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "shadowgrid/error.hpp"
#include "training.hpp"

namespace shadowgrid {

using numerics::Parameter;
using numerics::ParameterSet;
using numerics::Shape;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

void StgcnConfig::validate() const {
  if (blocks < 1 || kernel < 1 || channels < 1 || edge_hidden < 1 || window < 1) {
    throw Error(ErrorKind::InvalidConfig, "stgcn: blocks, kernel, channels, edge_hidden and window must be >= 1");
  }
  if (remaining_steps() < 1) {
    throw Error(ErrorKind::WindowTooShort, fmt::format("stgcn: window {} is exhausted by {} blocks with kernel {}",
                                                       window, blocks, kernel));
  }
}

nlohmann::json StgcnConfig::to_json() const {
  return {{"blocks", blocks},           {"kernel", kernel},   {"channels", channels},
          {"edge_hidden", edge_hidden}, {"window", window},   {"edge_attributes", edge_attributes},
          {"spatial", spatial}};
}

StgcnConfig StgcnConfig::from_json(const nlohmann::json& j) {
  StgcnConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "stgcn config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "blocks") c.blocks = value.get<Index>();
      else if (key == "kernel") c.kernel = value.get<Index>();
      else if (key == "channels") c.channels = value.get<Index>();
      else if (key == "edge_hidden") c.edge_hidden = value.get<Index>();
      else if (key == "window") c.window = value.get<Index>();
      else if (key == "edge_attributes") c.edge_attributes = value.get<bool>();
      else if (key == "spatial") c.spatial = value.get<bool>();
      else throw Error(ErrorKind::InvalidConfig, fmt::format("stgcn: unknown key '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("stgcn: {}", e.what()));
  }
  c.validate();
  return c;
}

StgcnBatch make_stgcn_batch(const DependencyGraph& g, const FeatureTensor& features,
                            const EdgeAttributeSeries& attrs, std::span<const Index> targets,
                            const StgcnConfig& config) {
  const Index n = g.node_count();
  const Index e_count = g.edge_count();
  const Index t_in = config.window;
  const Index f = features.features();
  const Index b_count = static_cast<Index>(targets.size());
  if (features.buildings != n) throw Error(ErrorKind::GraphMismatch, "feature tensor and graph disagree on nodes");
  const Index edge_cols = 2 * f + (config.edge_attributes ? EdgeAttributes::kCount : 0);

  StgcnBatch batch;
  batch.windows = b_count;
  batch.x = Tensor({b_count * n, t_in, f});
  batch.edge_input = Tensor({std::max<Index>(1, b_count * t_in * e_count), edge_cols});
  auto xm = batch.x.matrix();
  auto em = batch.edge_input.matrix();
  for (Index b = 0; b < b_count; ++b) {
    const Index t_last = targets[static_cast<std::size_t>(b)];
    const Index first = t_last - t_in + 1;
    if (first < 0 || t_last >= features.steps) {
      throw Error(ErrorKind::WindowTooShort, fmt::format("window for target step {} leaves the timeline", t_last));
    }
    for (Index node = 0; node < n; ++node) {
      for (Index tau = 0; tau < t_in; ++tau) xm.row((b * n + node) * t_in + tau) = features.row(node, first + tau);
    }
    for (Index tau = 0; tau < t_in; ++tau) {
      for (Index k = 0; k < e_count; ++k) {
        const auto& e = g.edges()[static_cast<std::size_t>(k)];
        auto row = em.row((b * t_in + tau) * e_count + k);
        row.head(f) = features.row(e.dst, first + tau);
        row.segment(f, f) = features.row(e.src, first + tau);
        if (config.edge_attributes) {
          row.tail(EdgeAttributes::kCount) = edge_attribute_features(attrs.at(k, first + tau)).transpose();
        }
      }
    }
  }
  return batch;
}

StgcnNetwork::StgcnNetwork(const StgcnConfig& config, Index features, const DependencyGraph& g, std::uint64_t seed)
    : config_(config), features_(features), nodes_(g.node_count()) {
  config_.validate();
  for (const auto& e : g.edges()) {
    dst_.push_back(e.dst);
    src_.push_back(e.src);
  }
  std::mt19937_64 rng(seed);
  const Index c = config_.channels;
  const Index k = config_.kernel;
  const Index edge_in = 2 * features + (config_.edge_attributes ? EdgeAttributes::kCount : 0);
  params_.add_glorot("edge.w1", {edge_in, config_.edge_hidden}, edge_in, config_.edge_hidden, rng);
  params_.add_zeros("edge.b1", {config_.edge_hidden});
  params_.add_glorot("edge.w2", {config_.edge_hidden, 1}, config_.edge_hidden, 1, rng);
  params_.add_zeros("edge.b2", {1});
  Index c_in = features;
  for (Index i = 0; i < config_.blocks; ++i) {
    const auto p = fmt::format("block{}.", i);
    params_.add_glorot(p + "t1.kernel", {k, c_in, 2 * c}, k * c_in, 2 * c, rng);
    params_.add_zeros(p + "t1.bias", {2 * c});
    params_.add_glorot(p + "graph.w", {c, c}, c, c, rng);
    params_.add_glorot(p + "t2.kernel", {k, c, 2 * c}, k * c, 2 * c, rng);
    params_.add_zeros(p + "t2.bias", {2 * c});
    c_in = c;
  }
  const Index rest = config_.remaining_steps();
  params_.add_glorot("head.kernel", {rest, c, 2 * c}, rest * c, 2 * c, rng);
  params_.add_zeros("head.bias", {2 * c});
  params_.add_glorot("out.w", {c, 1}, c, 1, rng);
  params_.add_zeros("out.b", {1});
}

template <typename Leaf>
Var StgcnNetwork::operators(Tape& tape, const StgcnBatch& batch, Leaf&& leaf) const {
  const Index groups = batch.windows * config_.window;
  const auto e_count = static_cast<Index>(dst_.size());
  if (e_count == 0) {
    Tensor eye({groups, nodes_, nodes_}, 0.0);
    for (Index g = 0; g < groups; ++g) {
      for (Index i = 0; i < nodes_; ++i) eye[(g * nodes_ + i) * nodes_ + i] = 1.0;
    }
    return tape.constant(std::move(eye));
  }
  using namespace numerics;
  const Var in = tape.constant(batch.edge_input);
  const Var hidden = relu(add_bias(linear(in, leaf("edge.w1")), leaf("edge.b1")));
  const Var w = softplus(add_bias(linear(hidden, leaf("edge.w2")), leaf("edge.b2")));
  const Var a = scatter_square(reshape(w, {groups * e_count}), groups, nodes_, dst_, src_);
  return numerics::normalized_adjacency(a);
}

Var st_conv_block(const Var& x, const Var& operators, const Var& kernel1, const Var& bias1, const Var& graph_weight,
                  const Var& kernel2, const Var& bias2, Index nodes, Index stride, Index offset) {
  using namespace numerics;
  const Var h = glu(add_bias(temporal_conv1d(x, kernel1), bias1));
  const Var mixed = operators.valid() ? spatial_mix(operators, h, nodes, stride, offset) : h;
  const Var s = relu(linear(mixed, graph_weight));
  return glu(add_bias(temporal_conv1d(s, kernel2), bias2));
}

template <typename Leaf>
Var StgcnNetwork::forward_impl(Tape& tape, const StgcnBatch& batch, Leaf&& leaf) const {
  using namespace numerics;
  if (batch.x.rank() != 3 || batch.x.dim(0) != batch.windows * nodes_ || batch.x.dim(1) != config_.window ||
      batch.x.dim(2) != features_) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("stgcn input {} does not match the network",
                                                      numerics::shape_string(batch.x.shape())));
  }
  const Var ops = config_.spatial ? operators(tape, batch, leaf) : Var();
  Var h = tape.constant(batch.x);
  Index offset = 0;
  for (Index i = 0; i < config_.blocks; ++i) {
    const auto p = fmt::format("block{}.", i);
    h = st_conv_block(h, ops, leaf(p + "t1.kernel"), leaf(p + "t1.bias"), leaf(p + "graph.w"), leaf(p + "t2.kernel"),
                      leaf(p + "t2.bias"), nodes_, config_.window, offset + config_.kernel - 1);
    offset += 2 * (config_.kernel - 1);
  }
  h = glu(add_bias(temporal_conv1d(h, leaf("head.kernel")), leaf("head.bias")));
  const Var out = add_bias(linear(h, leaf("out.w")), leaf("out.b"));
  return reshape(out, {batch.windows * nodes_, 1});
}

Var StgcnNetwork::forward(Tape& tape, const StgcnBatch& batch) {
  return forward_impl(tape, batch, [&](const std::string& name) { return tape.parameter(params_.get(name)); });
}

RowMatrixXd StgcnNetwork::predict(const StgcnBatch& batch) const {
  Tape tape;
  const Var out =
      forward_impl(tape, batch, [&](const std::string& name) { return tape.constant(params_.get(name).value); });
  return Eigen::Map<const RowMatrixXd>(out.value().data(), batch.windows, nodes_);
}

Tensor StgcnNetwork::adjacency(const StgcnBatch& batch) const {
  Tape tape;
  return operators(tape, batch, [&](const std::string& name) { return tape.constant(params_.get(name).value); })
      .value();
}

EdgeMlpWeights StgcnNetwork::edge_mlp_weights() const {
  EdgeMlpWeights w;
  w.w1 = params_.get("edge.w1").value.matrix();
  w.b1 = params_.get("edge.b1").value.flat();
  w.w2 = params_.get("edge.w2").value.flat();
  w.b2 = params_.get("edge.b2").value[0];
  w.use_attributes = config_.edge_attributes;
  return w;
}

namespace {

/// Normalized targets for `targets`, laid out like the network output.
Tensor batch_targets(const ForecastProblem& p, std::span<const Index> targets) {
  const Index n = p.buildings();
  Tensor y({static_cast<Index>(targets.size()) * n, 1});
  for (std::size_t b = 0; b < targets.size(); ++b) {
    for (Index node = 0; node < n; ++node) {
      y[static_cast<Index>(b) * n + node] = p.normalize(node, p.energy(node, targets[b]));
    }
  }
  return y;
}

}  // namespace

void StgcnForecaster::fit(const ForecastProblem& problem, const TrainOptions& options,
                          std::vector<TrainingLogRow>& log) {
  if (problem.window() != config_.window) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("stgcn window {} differs from the dataset window {}",
                                                      config_.window, problem.window()));
  }
  network_ = std::make_unique<StgcnNetwork>(config_, problem.features.features(), problem.graph, options.seed);
  const auto& train = problem.windows.train;
  if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training windows");

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ull);
  auto epoch = [&](numerics::AdamState& adam) {
    std::vector<Index> order(train.begin(), train.end());
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    Index seen = 0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(options.batch_size)) {
      const auto count = std::min<std::size_t>(static_cast<std::size_t>(options.batch_size), order.size() - s);
      const std::span<const Index> targets(order.data() + s, count);
      const auto batch = make_stgcn_batch(problem.graph, problem.features, problem.edge_attributes, targets, config_);
      Tape tape;
      const Var loss = numerics::mse(network_->forward(tape, batch), tape.constant(batch_targets(problem, targets)));
      network_->parameters().zero_grad();
      tape.backward(loss);
      numerics::adam_step(network_->parameters(), adam);
      total += loss.item() * double(count);
      seen += static_cast<Index>(count);
    }
    return total / double(seen);
  };
  auto validate = [&]() { return validation_mape(*this, problem); };
  fit_with_early_stopping(network_->parameters(), options, epoch, validate, "all", log);
}

RowMatrixXd StgcnForecaster::predict(const ForecastProblem& problem, std::span<const Index> targets) const {
  if (!network_) throw Error(ErrorKind::InvalidInput, "stgcn model is not trained");
  const Index n = problem.buildings();
  RowMatrixXd out(n, static_cast<Index>(targets.size()));
  constexpr std::size_t kChunk = 64;
  for (std::size_t s = 0; s < targets.size(); s += kChunk) {
    const auto count = std::min(kChunk, targets.size() - s);
    const auto batch =
        make_stgcn_batch(problem.graph, problem.features, problem.edge_attributes, targets.subspan(s, count), config_);
    const RowMatrixXd z = network_->predict(batch);
    for (std::size_t b = 0; b < count; ++b) {
      for (Index node = 0; node < n; ++node) {
        out(node, static_cast<Index>(s + b)) = problem.denormalize(node, z(static_cast<Index>(b), node));
      }
    }
  }
  return out;
}

ParameterSet StgcnForecaster::export_parameters() const {
  if (!network_) throw Error(ErrorKind::InvalidInput, "stgcn model is not trained");
  ParameterSet out;
  const auto& p = network_->parameters();
  for (std::size_t i = 0; i < p.size(); ++i) out.add(p[i].name, p[i].value);
  return out;
}

void StgcnForecaster::import_parameters(const ForecastProblem& problem, const ParameterSet& params) {
  network_ = std::make_unique<StgcnNetwork>(config_, problem.features.features(), problem.graph, 0);
  network_->parameters().assign_values(params);
}

}  // namespace shadowgrid
