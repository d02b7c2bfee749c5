// SPDX-License-Identifier: Apache-2.0
// Test-only helpers: finite-difference oracle and small generators.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "shadowgrid/numerics/tape.hpp"

namespace shadowgrid::testing {

inline std::string fixture(const std::string& name) { return std::string(SHADOWGRID_FIXTURES) + "/" + name; }

/// |a - n| / max(|a|, |n|, floor). The floor keeps round-off in near-zero
/// gradients (central differences carry ~1e-10 absolute noise at eps = 1e-6)
/// from being read as relative error.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central-difference derivative of `loss` w.r.t. value[index] of `t`.
inline double central_difference(numerics::Tensor& t, Index index, const std::function<double()>& loss,
                                  double eps = 1e-6) {
  const double saved = t[index];
  t[index] = saved + eps;
  const double up = loss();
  t[index] = saved - eps;
  const double down = loss();
  t[index] = saved;
  return (up - down) / (2.0 * eps);
}

/// Worst relative error between analytic parameter gradients (already in
/// p.grad) and central differences over every scalar of every parameter.
inline double worst_parameter_error(numerics::ParameterSet& params, const std::function<double()>& loss,
                                    double eps = 1e-6, double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    for (Index i = 0; i < p.value.size(); ++i) {
      const double numeric = central_difference(p.value, i, loss, eps);
      worst = std::max(worst, relative_error(p.grad[i], numeric, floor));
    }
  }
  return worst;
}

inline numerics::Tensor random_tensor(numerics::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  numerics::Tensor t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

}  // namespace shadowgrid::testing
