// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "shadowgrid/error.hpp"
#include "shadowgrid/models/baselines.hpp"

namespace shadowgrid {
namespace {

enum Column : Index { kFeature = 0, kThreshold = 1, kValue = 2, kLeaf = 3 };

struct Candidate {
  double gain = 0.0;
  Index feature = -1;
  double threshold = 0.0;
};

}  // namespace

void GradientBoosting::fit(const Eigen::Ref<const RowMatrixXd>& x, const Eigen::Ref<const VectorXd>& y) {
  const Index n = x.rows();
  const Index f = x.cols();
  if (n == 0) throw Error(ErrorKind::EmptyTrainingSet, "gradient boosting needs at least one row");
  if (y.size() != n) throw Error(ErrorKind::ShapeMismatch, "rows of X and y differ");
  if (options_.rounds < 0 || options_.depth < 0 || !(options_.learning_rate > 0.0 && options_.learning_rate <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "gbt: rounds, depth >= 0 and learning rate in (0, 1] required");
  }

  std::vector<std::vector<Index>> sorted(static_cast<std::size_t>(f));
  for (Index j = 0; j < f; ++j) {
    auto& order = sorted[static_cast<std::size_t>(j)];
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a, j) < x(b, j); });
  }

  base_ = y.mean();
  VectorXd pred = VectorXd::Constant(n, base_);
  trees_.clear();
  train_rmse_ = {std::sqrt((y - pred).squaredNorm() / double(n))};
  const Index nodes = nodes_per_tree();
  std::vector<Index> node_of(static_cast<std::size_t>(n));

  for (Index round = 0; round < options_.rounds; ++round) {
    const VectorXd residual = y - pred;
    RowMatrixXd tree = RowMatrixXd::Zero(nodes, 4);
    std::fill(node_of.begin(), node_of.end(), Index(0));
    std::vector<bool> open(static_cast<std::size_t>(nodes), false);
    open[0] = true;

    for (Index level = 0; level <= options_.depth; ++level) {
      const Index first = (Index(1) << level) - 1;
      const Index width = Index(1) << level;
      VectorXd sum = VectorXd::Zero(width), count = VectorXd::Zero(width);
      for (Index i = 0; i < n; ++i) {
        const Index k = node_of[static_cast<std::size_t>(i)] - first;
        if (k >= 0 && k < width) {
          sum(k) += residual(i);
          count(k) += 1.0;
        }
      }
      std::vector<Candidate> best(static_cast<std::size_t>(width));
      if (level < options_.depth) {
        for (Index j = 0; j < f; ++j) {
          VectorXd left_sum = VectorXd::Zero(width), left_count = VectorXd::Zero(width);
          VectorXd last = VectorXd::Constant(width, std::numeric_limits<double>::quiet_NaN());
          for (Index i : sorted[static_cast<std::size_t>(j)]) {
            const Index k = node_of[static_cast<std::size_t>(i)] - first;
            if (k < 0 || k >= width || !open[static_cast<std::size_t>(first + k)]) continue;
            const double v = x(i, j);
            if (left_count(k) > 0 && v > last(k)) {
              const double nl = left_count(k), nr = count(k) - nl;
              const double sl = left_sum(k), sr = sum(k) - sl;
              const double gain = sl * sl / nl + sr * sr / nr - sum(k) * sum(k) / count(k);
              auto& b = best[static_cast<std::size_t>(k)];
              if (gain > b.gain + 1e-12) b = Candidate{gain, j, 0.5 * (last(k) + v)};
            }
            left_sum(k) += residual(i);
            left_count(k) += 1.0;
            last(k) = v;
          }
        }
      }
      for (Index k = 0; k < width; ++k) {
        const Index node = first + k;
        if (!open[static_cast<std::size_t>(node)]) continue;
        const auto& b = best[static_cast<std::size_t>(k)];
        tree(node, kValue) = count(k) > 0 ? sum(k) / count(k) : 0.0;
        if (b.feature < 0) {
          tree(node, kLeaf) = 1.0;
        } else {
          tree(node, kFeature) = double(b.feature);
          tree(node, kThreshold) = b.threshold;
          open[static_cast<std::size_t>(2 * node + 1)] = true;
          open[static_cast<std::size_t>(2 * node + 2)] = true;
        }
      }
      if (level < options_.depth) {
        for (Index i = 0; i < n; ++i) {
          const Index node = node_of[static_cast<std::size_t>(i)];
          if (node < first || tree(node, kLeaf) == 1.0) continue;
          const auto feat = static_cast<Index>(tree(node, kFeature));
          node_of[static_cast<std::size_t>(i)] = x(i, feat) <= tree(node, kThreshold) ? 2 * node + 1 : 2 * node + 2;
        }
      }
    }
    for (Index i = 0; i < n; ++i) pred(i) += options_.learning_rate * tree(node_of[static_cast<std::size_t>(i)], kValue);
    trees_.push_back(std::move(tree));
    train_rmse_.push_back(std::sqrt((y - pred).squaredNorm() / double(n)));
  }
}

double GradientBoosting::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double out = base_;
  for (const auto& tree : trees_) {
    Index node = 0;
    while (tree(node, kLeaf) != 1.0) {
      const auto feat = static_cast<Index>(tree(node, kFeature));
      node = row(feat) <= tree(node, kThreshold) ? 2 * node + 1 : 2 * node + 2;
    }
    out += options_.learning_rate * tree(node, kValue);
  }
  return out;
}

VectorXd GradientBoosting::predict(const Eigen::Ref<const RowMatrixXd>& x) const {
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x.row(i));
  return out;
}

numerics::Tensor GradientBoosting::trees_tensor() const {
  const Index nodes = nodes_per_tree();
  numerics::Tensor out({std::max<Index>(1, static_cast<Index>(trees_.size())), nodes, 4}, 0.0);
  if (trees_.empty()) {
    // A single zero-valued leaf stands in for "no rounds".
    out[kLeaf] = 1.0;
    return out;
  }
  for (std::size_t r = 0; r < trees_.size(); ++r) {
    Eigen::Map<RowMatrixXd>(out.data() + static_cast<Index>(r) * nodes * 4, nodes, 4) = trees_[r];
  }
  return out;
}

void GradientBoosting::set_trees(double base, const numerics::Tensor& trees) {
  const Index nodes = nodes_per_tree();
  if (trees.rank() != 3 || trees.dim(1) != nodes || trees.dim(2) != 4) {
    throw Error(ErrorKind::ShapeMismatch, "tree tensor does not match the configured depth");
  }
  base_ = base;
  trees_.clear();
  train_rmse_.clear();
  for (Index r = 0; r < trees.dim(0); ++r) {
    trees_.emplace_back(Eigen::Map<const RowMatrixXd>(trees.data() + r * nodes * 4, nodes, 4));
  }
}

}  // namespace shadowgrid
