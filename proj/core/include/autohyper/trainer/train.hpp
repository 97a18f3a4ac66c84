#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autohyper/snapshot.hpp"
#include "autohyper/trainer/dataset.hpp"
#include "autohyper/trainer/net.hpp"
#include "autohyper/trainer/optimizer.hpp"

namespace autohyper::trainer {

inline constexpr double kDivergenceLoss = 1e4;

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t epochs = 5;
  std::size_t batch_size = 128;
  std::uint64_t net_seed = 0;
};

struct TrainResult {
  Snapshot initial;                   // conv weights before the first update
  std::vector<Snapshot> snapshots;    // one deep copy per completed epoch
  std::vector<double> train_accuracy; // running accuracy over each epoch's batches
  std::vector<double> train_loss;     // mean batch loss per epoch
  bool divergent = false;
  std::string divergence_reason;
  std::optional<MiniConvNet<float>> net;  // final state
};

/// Deterministic in (dataset, config): batch order is a per-(seed, epoch) permutation.
/// Stops early and flags divergence on a non-finite or > 1e4 loss, or a non-finite parameter.
TrainResult train_epochs(const Dataset& data, const TrainConfig& config);

double accuracy(MiniConvNet<float>& net, const Dataset& data, std::size_t batch_size = 256);

/// Indices 0..n-1 shuffled by a generator keyed on (seed, epoch).
std::vector<std::size_t> batch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

enum class GradientScope { all, head_only };

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t skipped_kinks = 0;  // perturbation flipped a ReLU or max-pool decision
};

/// Central differences (64-bit) against the analytic gradient of the mean batch loss over a
/// random subset of `coordinates` parameters. Coordinates whose +-h perturbation changes the
/// activation pattern are replaced by fresh draws, since the loss is not differentiable there.
GradientCheckResult gradient_check(std::uint64_t net_seed, const Dataset& batch,
                                   GradientScope scope = GradientScope::all,
                                   std::size_t coordinates = 200, double h = 1e-5,
                                   std::uint64_t coordinate_seed = 0);

}  // namespace autohyper::trainer
