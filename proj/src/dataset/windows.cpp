// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/dataset/windows.hpp"

#include <fmt/format.h>

#include <cmath>

#include "shadowgrid/error.hpp"

namespace shadowgrid {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

void SplitFractions::validate() const {
  if (train <= 0.0 || val < 0.0 || test < 0.0 || std::abs(train + val + test - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidConfig,
                fmt::format("split fractions ({}, {}, {}) must be non-negative and sum to 1", train, val, test));
  }
}

const std::vector<Index>& WindowSet::targets(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
  }
  return train;
}

WindowSet make_windows(Index steps, Index window, const SplitFractions& split, Index horizon) {
  split.validate();
  if (horizon != 1) throw Error(ErrorKind::InvalidConfig, "only a one-hour horizon is supported");
  if (window < 1) throw Error(ErrorKind::InvalidConfig, "window must be at least 1");
  if (steps < window + horizon) {
    throw Error(ErrorKind::TimelineTooShort, fmt::format("{} steps cannot hold a {}-step window", steps, window));
  }
  WindowSet ws;
  ws.window = window;
  ws.total = steps - window;
  const auto n_train = static_cast<Index>(std::floor(split.train * double(ws.total) + 1e-9));
  const auto n_val = static_cast<Index>(std::floor(split.val * double(ws.total) + 1e-9));
  const Index first = window;
  for (Index i = 0; i < ws.total; ++i) {
    const Index t = first + i;
    if (i < n_train) {
      ws.train.push_back(t);
    } else if (i < n_train + n_val) {
      if (i - n_train >= window) ws.val.push_back(t);
    } else if (i - n_train - n_val >= window) {
      ws.test.push_back(t);
    }
  }
  if (ws.train.empty()) throw Error(ErrorKind::TimelineTooShort, "training split is empty");
  return ws;
}

}  // namespace shadowgrid
