// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>
#include <vector>

#include "shadowgrid/types.hpp"

namespace shadowgrid {

enum class Split { Train, Val, Test };
std::string_view to_string(Split s);

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;

  /// Throws InvalidConfig unless all are non-negative and sum to 1.
  void validate() const;
};

/// Windows are identified by their target step t; the inputs are feature rows
/// t - window + 1 .. t (row t holds the lagged energy of t - 1).
struct WindowSet {
  Index window = 0;
  Index total = 0;  // windows before splitting
  std::vector<Index> train, val, test;

  const std::vector<Index>& targets(Split s) const;
  /// One past the last training target; feature statistics stop here.
  Index train_steps() const { return train.empty() ? 0 : train.back() + 1; }
};

/// Chronological split. The first `window` windows of val and test are dropped
/// so that no input window reaches into an earlier split's targets.
WindowSet make_windows(Index steps, Index window, const SplitFractions& split = {}, Index horizon = 1);

}  // namespace shadowgrid
