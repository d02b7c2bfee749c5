// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace shadowgrid {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXd = RowMatrix<double>;
using VectorXd = Vector<double>;

template <typename Scalar>
inline constexpr Scalar kPi = Scalar(3.141592653589793238462643383279502884L);

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) { return deg / Scalar(180) * kPi<Scalar>; }
template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) { return rad / kPi<Scalar> * Scalar(180); }

}  // namespace shadowgrid
