// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "shadowgrid/numerics/tape.hpp"

namespace shadowgrid::numerics {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; <= 0 disables.
  double clip_norm = 0.0;
};

struct AdamState {
  AdamOptions options;
  long long step = 0;
  std::vector<VectorXd> m;
  std::vector<VectorXd> v;

  AdamState() = default;
  explicit AdamState(AdamOptions opts) : options(opts) {}
};

/// One bias-corrected Adam update over every parameter of `params`. Moment
/// buffers are created on the first call. Throws MissingGradient if any
/// parameter has no gradient populated.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace shadowgrid::numerics
