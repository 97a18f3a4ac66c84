#include "autohyper/random_search.hpp"

#include <cmath>
#include <cstdio>

#include "autohyper/error.hpp"
#include "autohyper/parallel.hpp"

namespace autohyper {

LogUniformBounds default_bounds(const std::string& name) {
  if (name == "lr") return {name, 1e-4, 0.1};
  if (name == "weight_decay") return {name, 1e-7, 0.1};
  throw ValidationError("no default search bounds for hyper-parameter '" + name + "'");
}

HpPoint sample_log_uniform(std::span<const LogUniformBounds> space, Rng& rng, std::string id) {
  HpPoint p;
  p.id = std::move(id);
  for (const auto& b : space) {
    const double lo = std::log(b.lo), hi = std::log(b.hi);
    p.names.push_back(b.name);
    p.values.push_back(std::exp(lo + (hi - lo) * rng.uniform()));
  }
  return p;
}

RandomSearchResult random_search(std::span<const LogUniformBounds> space,
                                 std::size_t budget_epochs, const Evaluator& evaluator,
                                 std::uint64_t seed, std::size_t threads) {
  if (space.empty()) throw ValidationError("random search needs at least one hyper-parameter");
  for (const auto& b : space) {
    if (!(b.lo > 0.0) || !(b.lo < b.hi) || !std::isfinite(b.hi)) {
      throw ValidationError("bounds for '" + b.name + "' must satisfy 0 < lo < hi");
    }
  }
  const std::size_t per_trial = evaluator.epochs_per_trial();
  if (per_trial == 0) throw ValidationError("evaluator trains zero epochs per trial");
  const std::size_t n = budget_epochs / per_trial;
  if (n == 0) {
    throw ValidationError("budget of " + std::to_string(budget_epochs) +
                          " epochs buys no trials of " + std::to_string(per_trial) + " epochs");
  }

  RandomSearchResult result;
  result.seed = seed;
  Rng rng(derive_seed(seed, 0x52414e44));  // "RAND"
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "rs_%04zu", i);
    result.samples.push_back(RandomSearchSample{sample_log_uniform(space, rng, id)});
  }

  parallel_for(n, threads, [&](std::size_t i) {
    RandomSearchSample& s = result.samples[i];
    Evaluation e;
    try {
      e = evaluator.evaluate(s.point, seed);
    } catch (const NumericalError& err) {
      e.divergent = true;
      e.note = err.what();
    }
    s.divergent = e.divergent;
    s.z = e.divergent ? 1.0 : e.z;
    if (!e.divergent) {
      if (e.train_accuracy.empty()) {
        throw ValidationError("random search needs an evaluator that reports training accuracy");
      }
      s.final_train_accuracy = e.train_accuracy.back();
    }
  });

  for (std::size_t i = 1; i < n; ++i) {
    if (result.samples[i].final_train_accuracy > result.samples[result.winner].final_train_accuracy) {
      result.winner = i;
    }
  }
  result.epoch_budget = n * per_trial;
  return result;
}

}  // namespace autohyper
