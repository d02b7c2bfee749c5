// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fmt/format.h>

#include <cmath>

#include "shadowgrid/error.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {

namespace detail {
template <typename DA, typename DB>
void require_series(const Eigen::MatrixBase<DA>& predicted, const Eigen::MatrixBase<DB>& actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("predicted has {} values, actual {}", predicted.size(), actual.size()));
  }
  if (actual.size() == 0) throw Error(ErrorKind::EmptySeries, "metric over an empty series");
}
}  // namespace detail

/// sqrt(mean((y - y_hat)^2)).
template <typename DA, typename DB>
typename DA::Scalar rmse(const Eigen::MatrixBase<DA>& predicted, const Eigen::MatrixBase<DB>& actual) {
  detail::require_series(predicted, actual);
  using std::sqrt;
  return sqrt((predicted.derived().reshaped() - actual.derived().reshaped()).squaredNorm() /
              typename DA::Scalar(actual.size()));
}

template <typename Scalar>
struct MapeResult {
  Scalar percent = Scalar(0);
  Index used = 0;
  Index excluded = 0;  // actual values equal to zero
};

/// 100 * mean(|y - y_hat| / y_hat) over points with y_hat != 0.
template <typename DA, typename DB>
MapeResult<typename DA::Scalar> mape(const Eigen::MatrixBase<DA>& predicted, const Eigen::MatrixBase<DB>& actual) {
  using Scalar = typename DA::Scalar;
  detail::require_series(predicted, actual);
  const auto p = predicted.derived().reshaped();
  const auto a = actual.derived().reshaped();
  MapeResult<Scalar> out;
  Scalar total(0);
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) == Scalar(0)) {
      ++out.excluded;
      continue;
    }
    using std::abs;
    total += abs(p(i) - a(i)) / abs(a(i));
    ++out.used;
  }
  if (out.used == 0) throw Error(ErrorKind::AllZeroActuals, "every actual value is zero");
  out.percent = Scalar(100) * total / Scalar(out.used);
  return out;
}

/// Population variance (divide by n).
template <typename Derived>
typename Derived::Scalar population_variance(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() == 0) throw Error(ErrorKind::EmptySeries, "variance of an empty set");
  const auto mean = v.mean();
  return (v.array() - mean).square().sum() / typename Derived::Scalar(v.size());
}

}  // namespace shadowgrid
