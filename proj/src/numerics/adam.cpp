// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/numerics/adam.hpp"

#include <fmt/format.h>

#include <cmath>

#include "shadowgrid/error.hpp"

namespace shadowgrid::numerics {

void adam_step(ParameterSet& params, AdamState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (!p.grad_ready || p.grad.size() != p.value.size()) {
      throw Error(ErrorKind::MissingGradient, fmt::format("parameter {} has no gradient", p.name));
    }
  }
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m.push_back(VectorXd::Zero(params[i].value.size()));
      state.v.push_back(VectorXd::Zero(params[i].value.size()));
    }
  }
  double clip = 1.0;
  if (state.options.clip_norm > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) sq += params[i].grad.flat().squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > state.options.clip_norm) clip = state.options.clip_norm / norm;
  }

  ++state.step;
  const auto& o = state.options;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (state.m[i].size() != p.value.size()) {
      throw Error(ErrorKind::ShapeMismatch, fmt::format("Adam moments do not match parameter {}", p.name));
    }
    const VectorXd g = clip * p.grad.flat();
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * g;
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * g.cwiseAbs2();
    p.value.flat().array() -=
        o.lr * (state.m[i].array() / bc1) / ((state.v[i].array() / bc2).sqrt() + o.eps);
  }
}

}  // namespace shadowgrid::numerics
