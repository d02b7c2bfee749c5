// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/numerics/tensor.hpp"

#include <fmt/format.h>

#include "shadowgrid/error.hpp"

namespace shadowgrid::numerics {

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s + "]";
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorKind::ShapeMismatch, "tensor needs rank >= 1");
  for (Index d : shape) {
    if (d <= 0) throw Error(ErrorKind::ShapeMismatch, fmt::format("non-positive extent in {}", shape_string(shape)));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_ = VectorXd::Constant(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, VectorXd data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("{} values for shape {}", data_.size(), shape_string(shape_)));
  }
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape), Eigen::Map<const VectorXd>(values.begin(), static_cast<Index>(values.size()))) {}

Tensor Tensor::from_matrix(const Eigen::Ref<const RowMatrixXd>& m) {
  Tensor t({m.rows(), m.cols()});
  t.matrix() = m;
  return t;
}

Index Tensor::rows() const { return shape_.empty() ? 0 : data_.size() / shape_.back(); }

Tensor::MatrixMap Tensor::matrix() { return MatrixMap(data_.data(), rows(), cols()); }
Tensor::ConstMatrixMap Tensor::matrix() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

double Tensor::item() const {
  if (data_.size() != 1) throw Error(ErrorKind::NonScalarLoss, fmt::format("item() on {}", shape_string(shape_)));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

}  // namespace shadowgrid::numerics
