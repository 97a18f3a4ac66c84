#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autohyper/search.hpp"
#include "autohyper/trainer/dataset.hpp"
#include "autohyper/trainer/train.hpp"

namespace autohyper::harness {

/// Probes a per-epoch snapshot sequence into a RankProbe and fills Z / Z_t.
Evaluation evaluate_snapshots(const std::vector<Snapshot>& snapshots);

/// Trains MiniConvNet for T epochs from an initialization keyed on the run seed (shared by all
/// configurations of that seed) and probes the emitted conv weights.
class BuiltinEvaluator final : public Evaluator {
 public:
  BuiltinEvaluator(trainer::Dataset train, trainer::TrainConfig base,
                   std::optional<std::filesystem::path> snapshot_root = std::nullopt);

  std::size_t epochs_per_trial() const override { return base_.epochs; }
  Evaluation evaluate(const HpPoint& point, std::uint64_t seed) const override;

  /// Training configuration for `point` at `seed`, `epochs` long.
  trainer::TrainConfig config_for(const HpPoint& point, std::uint64_t seed, std::size_t epochs) const;

  const trainer::Dataset& dataset() const { return train_; }

  /// <root>/seed_<s>/<id>/
  static std::filesystem::path snapshot_directory(const std::filesystem::path& root,
                                                  std::uint64_t seed, const std::string& id);

 private:
  trainer::Dataset train_;
  trainer::TrainConfig base_;
  std::optional<std::filesystem::path> snapshot_root_;
};

/// Replays externally produced snapshots from <root>/seed_<s>/<id>/ or <root>/<id>/.
class SnapshotEvaluator final : public Evaluator {
 public:
  SnapshotEvaluator(std::filesystem::path root, std::size_t epochs);

  std::size_t epochs_per_trial() const override { return epochs_; }
  Evaluation evaluate(const HpPoint& point, std::uint64_t seed) const override;

 private:
  std::filesystem::path root_;
  std::size_t epochs_;
};

struct FinalEvaluation {
  std::size_t epochs = 0;
  double train_accuracy = 0.0;
  std::optional<double> heldout_accuracy;
  bool divergent = false;
  std::string note;
};

/// Longer training run at fixed hyper-parameters, reporting final training accuracy and,
/// when a held-out set is given, held-out accuracy.
FinalEvaluation final_evaluation(const BuiltinEvaluator& evaluator, const HpPoint& point,
                                 std::uint64_t seed, std::size_t epochs,
                                 const trainer::Dataset* heldout);

}  // namespace autohyper::harness
