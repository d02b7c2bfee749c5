// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "shadowgrid/types.hpp"

namespace shadowgrid::numerics {

using Shape = std::vector<Index>;

Index shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float64 array of any rank >= 1.
class Tensor {
 public:
  using MatrixMap = Eigen::Map<RowMatrixXd>;
  using ConstMatrixMap = Eigen::Map<const RowMatrixXd>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, VectorXd data);
  Tensor(Shape shape, std::initializer_list<double> values);

  static Tensor scalar(double v) { return Tensor({1}, v); }
  static Tensor from_matrix(const Eigen::Ref<const RowMatrixXd>& m);

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  VectorXd& flat() { return data_; }
  const VectorXd& flat() const { return data_; }

  /// Leading axes collapsed into rows, last axis as columns.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;
  Index rows() const;
  Index cols() const { return shape_.empty() ? 0 : shape_.back(); }

  double& operator[](Index i) { return data_[i]; }
  double operator[](Index i) const { return data_[i]; }
  double item() const;

  Tensor reshaped(Shape shape) const;
  void set_zero() { data_.setZero(); }
  bool all_finite() const { return data_.allFinite(); }

 private:
  Shape shape_;
  VectorXd data_;
};

}  // namespace shadowgrid::numerics
