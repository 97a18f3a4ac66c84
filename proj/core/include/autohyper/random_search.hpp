#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autohyper/rng.hpp"
#include "autohyper/search.hpp"

namespace autohyper {

struct LogUniformBounds {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

/// Bounds used for the baseline: lr in [1e-4, 0.1], weight decay in [1e-7, 0.1].
LogUniformBounds default_bounds(const std::string& name);

/// exp(U(log lo, log hi)) per hyper-parameter.
HpPoint sample_log_uniform(std::span<const LogUniformBounds> space, Rng& rng, std::string id);

struct RandomSearchSample {
  HpPoint point;
  double final_train_accuracy = 0.0;  // 0 for diverged trials
  double z = 1.0;
  bool divergent = false;
};

struct RandomSearchResult {
  std::uint64_t seed = 0;
  std::vector<RandomSearchSample> samples;
  std::size_t winner = 0;
  std::size_t epoch_budget = 0;  // epochs_per_trial * samples.size()

  const RandomSearchSample& best() const { return samples[winner]; }
};

/// Draws floor(budget / T) log-uniform configurations, trains each for T epochs and keeps the
/// one with the highest final training accuracy (earliest sample wins ties).
RandomSearchResult random_search(std::span<const LogUniformBounds> space,
                                 std::size_t budget_epochs, const Evaluator& evaluator,
                                 std::uint64_t seed, std::size_t threads = 1);

}  // namespace autohyper
