// SPDX-License-Identifier: Apache-2.0
// Dense graph-convolution kernels on Eigen types. The trainable model records
// the same arithmetic on the tape; these are the inference and reference forms.
#pragma once

#include <fmt/format.h>

#include <span>

#include "shadowgrid/error.hpp"
#include "shadowgrid/graph.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {

/// D^{-1/2} (A + I) D^{-1/2} with D_ii = sum_j (A + I)_ij.
template <typename Derived>
RowMatrix<typename Derived::Scalar> normalized_adjacency(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("adjacency must be square, got {}x{}", a.rows(), a.cols()));
  }
  if ((a.array() < Scalar(0)).any()) throw Error(ErrorKind::NegativeWeight, "adjacency has a negative entry");
  RowMatrix<Scalar> tilde = a;
  tilde.diagonal().array() += Scalar(1);
  const Vector<Scalar> s = tilde.rowwise().sum().array().rsqrt();
  return s.asDiagonal() * tilde * s.asDiagonal();
}

/// ReLU(L X W).
template <typename DL, typename DX, typename DW>
RowMatrix<typename DX::Scalar> graph_conv(const Eigen::MatrixBase<DL>& l, const Eigen::MatrixBase<DX>& x,
                                          const Eigen::MatrixBase<DW>& w) {
  if (l.rows() != l.cols() || l.cols() != x.rows() || x.cols() != w.rows()) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("graph_conv: L {}x{}, X {}x{}, W {}x{}", l.rows(), l.cols(),
                                                      x.rows(), x.cols(), w.rows(), w.cols()));
  }
  return (l * x * w).cwiseMax(typename DX::Scalar(0));
}

/// Edge attributes rescaled to order one: radiation / 1000, angle / pi,
/// binary, distance / 100.
template <typename Scalar = double>
Eigen::Matrix<Scalar, 4, 1> edge_attribute_features(const EdgeAttributes& a) {
  return {Scalar(a.radiation / 1000.0), Scalar(a.angle_rad / kPi<double>), Scalar(a.binary),
          Scalar(a.distance_m / 100.0)};
}

/// Two-layer perceptron producing one non-negative weight per linked pair.
struct EdgeMlpWeights {
  RowMatrixXd w1;  // inputs x hidden
  VectorXd b1;
  VectorXd w2;     // hidden
  double b2 = 0.0;
  bool use_attributes = true;

  Index inputs() const { return w1.rows(); }
};

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// softplus(w2 . relu(W1^T [x_dst, x_src, e] + b1) + b2).
template <typename DA, typename DB>
double edge_weight_mlp(const Eigen::MatrixBase<DA>& x_dst, const Eigen::MatrixBase<DB>& x_src,
                       const EdgeAttributes& e, const EdgeMlpWeights& p) {
  const Index f = x_dst.size();
  const Index expected = 2 * f + (p.use_attributes ? EdgeAttributes::kCount : 0);
  if (x_src.size() != f || p.inputs() != expected) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("edge MLP expects {} inputs, got features {} and {}", p.inputs(), f, x_src.size()));
  }
  VectorXd in(expected);
  in.head(f) = x_dst.transpose();
  in.segment(f, f) = x_src.transpose();
  if (p.use_attributes) in.tail(EdgeAttributes::kCount) = edge_attribute_features(e);
  const VectorXd hidden = (p.w1.transpose() * in + p.b1).cwiseMax(0.0);
  return softplus(p.w2.dot(hidden) + p.b2);
}

/// A_t with A(dst, src) = edge_weight_mlp for every edge of `g` and zero
/// elsewhere. `x` holds one feature row per node; `attrs` one entry per edge.
inline RowMatrixXd build_adjacency_t(const DependencyGraph& g, const Eigen::Ref<const RowMatrixXd>& x,
                                     std::span<const EdgeAttributes> attrs, const EdgeMlpWeights& p) {
  if (x.rows() != g.node_count() || static_cast<Index>(attrs.size()) != g.edge_count()) {
    throw Error(ErrorKind::ShapeMismatch, "build_adjacency_t: inputs do not match the graph");
  }
  RowMatrixXd a = RowMatrixXd::Zero(g.node_count(), g.node_count());
  for (std::size_t k = 0; k < attrs.size(); ++k) {
    const auto& e = g.edges()[k];
    a(e.dst, e.src) = edge_weight_mlp(x.row(e.dst), x.row(e.src), attrs[k], p);
  }
  return a;
}

}  // namespace shadowgrid
