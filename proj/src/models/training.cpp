// SPDX-License-Identifier: Apache-2.0
#include "training.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "shadowgrid/error.hpp"
#include "shadowgrid/evaluation/metrics.hpp"

namespace shadowgrid {

double validation_mape(const Forecaster& model, const ForecastProblem& problem) {
  const auto& val = problem.windows.val;
  if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
  return mape(model.predict(problem, val), problem.actual(val)).percent;
}

void fit_with_early_stopping(numerics::ParameterSet& params, const TrainOptions& options,
                             const std::function<double(numerics::AdamState&)>& epoch,
                             const std::function<double()>& validate, const std::string& building,
                             std::vector<TrainingLogRow>& log) {
  numerics::AdamState adam(numerics::AdamOptions{.lr = options.learning_rate});
  std::vector<numerics::Tensor> best;
  double best_mape = std::numeric_limits<double>::infinity();
  Index stale = 0;
  for (Index e = 1; e <= options.max_epochs; ++e) {
    const double loss = epoch(adam);
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::NumericFailure, fmt::format("training loss diverged at epoch {} ({})", e, building));
    }
    const double score = validate();
    log.push_back(TrainingLogRow{e, building, loss, score});
    if (std::isnan(score)) continue;
    if (score < best_mape) {
      best_mape = score;
      stale = 0;
      best.clear();
      for (std::size_t i = 0; i < params.size(); ++i) best.push_back(params[i].value);
    } else if (++stale >= options.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < best.size(); ++i) params[i].value = best[i];
}

void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<Index>(count, 1))));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto run = [&](Index i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (Index i = next++; i < count; i = next++) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace shadowgrid
