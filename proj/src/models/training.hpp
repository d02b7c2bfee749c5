// SPDX-License-Identifier: Apache-2.0
// Internal training helpers shared by the trainable forecasters.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "shadowgrid/models/forecaster.hpp"
#include "shadowgrid/numerics/adam.hpp"

namespace shadowgrid {

/// Pooled MAPE of `model` on the validation windows; NaN without any.
double validation_mape(const Forecaster& model, const ForecastProblem& problem);

/// Runs epochs until `max_epochs` or `patience` epochs pass without a lower
/// validation MAPE, then restores the best parameters. `epoch` returns the
/// mean training loss; a non-finite loss raises NumericFailure.
void fit_with_early_stopping(numerics::ParameterSet& params, const TrainOptions& options,
                             const std::function<double(numerics::AdamState&)>& epoch,
                             const std::function<double()>& validate, const std::string& building,
                             std::vector<TrainingLogRow>& log);

/// Calls fn(i) for i in [0, count) on up to `threads` threads. The first
/// exception (lowest index) is rethrown after all workers finish.
void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& fn);

}  // namespace shadowgrid
