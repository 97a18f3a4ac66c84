#include "autohyper/harness/evaluators.hpp"

#include <memory>

#include "autohyper/error.hpp"
#include "autohyper/metrics.hpp"

namespace autohyper::harness {

namespace fs = std::filesystem;

Evaluation evaluate_snapshots(const std::vector<Snapshot>& snapshots) {
  std::vector<WeightSet> sets;
  sets.reserve(snapshots.size());
  for (const auto& s : snapshots) sets.push_back(promote(s));
  auto probe = std::make_shared<RankProbe>(probe_weight_sets(sets));
  Evaluation e;
  e.z_per_epoch = zero_rank_fractions(*probe);
  e.z = global_stable_rank(*probe);
  e.probe = std::move(probe);
  return e;
}

BuiltinEvaluator::BuiltinEvaluator(trainer::Dataset train, trainer::TrainConfig base,
                                   std::optional<fs::path> snapshot_root)
    : train_(std::move(train)), base_(base), snapshot_root_(std::move(snapshot_root)) {
  if (base_.epochs == 0) throw ValidationError("trials need at least one epoch");
  if (train_.size() == 0) throw ValidationError("training set is empty");
}

fs::path BuiltinEvaluator::snapshot_directory(const fs::path& root, std::uint64_t seed,
                                              const std::string& id) {
  return root / ("seed_" + std::to_string(seed)) / id;
}

trainer::TrainConfig BuiltinEvaluator::config_for(const HpPoint& point, std::uint64_t seed,
                                                  std::size_t epochs) const {
  trainer::TrainConfig c = base_;
  c.epochs = epochs;
  c.net_seed = seed;
  for (std::size_t i = 0; i < point.names.size(); ++i) {
    const auto& name = point.names[i];
    const double v = point.values[i];
    if (name == "lr") c.optimizer.lr = v;
    else if (name == "weight_decay") c.optimizer.weight_decay = v;
    else if (name == "momentum") c.optimizer.momentum = v;
    else throw ConfigError("the built-in trainer cannot apply hyper-parameter '" + name + "'");
  }
  return c;
}

Evaluation BuiltinEvaluator::evaluate(const HpPoint& point, std::uint64_t seed) const {
  const auto result = trainer::train_epochs(train_, config_for(point, seed, base_.epochs));
  if (result.divergent) {
    Evaluation e;
    e.z = 1.0;
    e.divergent = true;
    e.note = "diverged: " + result.divergence_reason;
    e.train_accuracy = result.train_accuracy;
    e.train_accuracy.resize(base_.epochs, 0.0);
    return e;
  }
  if (snapshot_root_) {
    const auto dir = snapshot_directory(*snapshot_root_, seed, point.id);
    for (std::size_t t = 0; t < result.snapshots.size(); ++t)
      write_snapshot(dir / snapshot_filename(t + 1), result.snapshots[t]);
  }
  Evaluation e = evaluate_snapshots(result.snapshots);
  e.train_accuracy = result.train_accuracy;
  return e;
}

SnapshotEvaluator::SnapshotEvaluator(fs::path root, std::size_t epochs)
    : root_(std::move(root)), epochs_(epochs) {
  if (epochs_ == 0) throw ValidationError("trials need at least one epoch");
}

Evaluation SnapshotEvaluator::evaluate(const HpPoint& point, std::uint64_t seed) const {
  fs::path dir = BuiltinEvaluator::snapshot_directory(root_, seed, point.id);
  if (!fs::is_directory(dir)) dir = root_ / point.id;
  if (!fs::is_directory(dir))
    throw IncompleteProbeError("no snapshots for configuration " + point.id + " under " +
                               root_.string());
  auto snapshots = read_snapshot_sequence(dir);
  if (snapshots.size() < epochs_)
    throw IncompleteProbeError(dir.string() + ": missing epoch " +
                               std::to_string(snapshots.size() + 1));
  snapshots.resize(epochs_);
  return evaluate_snapshots(snapshots);
}

FinalEvaluation final_evaluation(const BuiltinEvaluator& evaluator, const HpPoint& point,
                                 std::uint64_t seed, std::size_t epochs,
                                 const trainer::Dataset* heldout) {
  auto result = trainer::train_epochs(evaluator.dataset(), evaluator.config_for(point, seed, epochs));
  FinalEvaluation f;
  f.epochs = epochs;
  if (result.divergent) {
    f.divergent = true;
    f.note = "diverged: " + result.divergence_reason;
    return f;
  }
  f.train_accuracy = result.train_accuracy.back();
  if (heldout != nullptr && heldout->size() > 0)
    f.heldout_accuracy = trainer::accuracy(*result.net, *heldout);
  return f;
}

}  // namespace autohyper::harness
