#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autohyper/lattice.hpp"
#include "autohyper/metrics.hpp"

namespace autohyper {

inline constexpr std::size_t kDefaultProbeEpochs = 5;

/// Outcome of training one configuration for T epochs and probing its weights.
struct Evaluation {
  double z = 1.0;
  std::vector<double> z_per_epoch;
  std::vector<double> train_accuracy;  // per epoch; empty when the evaluator has no accuracy
  bool divergent = false;
  std::string note;
  std::shared_ptr<const RankProbe> probe;
};

/// Deterministic map (configuration, seed) -> Evaluation. Implementations must be safe to call
/// concurrently for distinct configurations.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::size_t epochs_per_trial() const = 0;
  virtual Evaluation evaluate(const HpPoint& point, std::uint64_t seed) const = 0;
};

/// Linearizable exponent-vector -> Evaluation map. Concurrent requests for the same key block
/// on the single in-flight computation.
class EvaluationCache {
 public:
  struct Lookup {
    Evaluation evaluation;
    bool hit = false;
  };

  Lookup get_or_compute(const Exponents& key, const std::function<Evaluation()>& compute);
  std::optional<Evaluation> find(const Exponents& key) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<Exponents, std::shared_future<Evaluation>> entries_;
};

/// An evaluator bound to one run seed and one lattice, with result caching. Evaluator failures
/// that raise NumericalError are recorded as divergent trials scored Z = 1.
class CachedEvaluator {
 public:
  CachedEvaluator(const Evaluator& evaluator, std::uint64_t seed);

  EvaluationCache::Lookup evaluate(const HpConfig& config);
  std::vector<EvaluationCache::Lookup> evaluate_all(std::span<const HpConfig> configs,
                                                    std::size_t threads);

  std::uint64_t seed() const { return seed_; }
  std::size_t epochs_per_trial() const { return evaluator_.epochs_per_trial(); }
  std::size_t distinct_evaluations() const { return cache_.size(); }
  std::size_t epoch_budget() const { return epochs_per_trial() * cache_.size(); }
  std::vector<std::string> divergence_log() const;

 private:
  const Evaluator& evaluator_;
  std::uint64_t seed_;
  EvaluationCache cache_;
  std::shared_ptr<const LatticeSpec> lattice_;
  mutable std::mutex log_mu_;
  std::vector<std::string> divergence_log_;
};

struct SearchOptions {
  std::size_t max_steps = 50;
  double epsilon_plateau = 0.01;
  double bootstrap_threshold = 0.9;
  std::size_t threads = 1;
};

enum class Phase { bootstrap, descent };
enum class Verdict { running, converged, budget_exhausted, no_bootstrap };

std::string to_string(Phase phase);
std::string to_string(Verdict verdict);

struct MemberRecord {
  Exponents delta;
  Exponents exponents;
  std::vector<double> values;
  double z = 1.0;
  bool divergent = false;
  bool cached = false;  // already evaluated earlier in this run
};

struct StepRecord {
  std::size_t step = 0;
  Phase phase = Phase::bootstrap;
  Exponents center;
  bool truncated = false;
  std::vector<MemberRecord> members;
  std::size_t chosen = 0;
  std::size_t new_evaluations = 0;
  std::vector<double> rank_history_tail;
  std::vector<double> stabilized_tail;
  std::size_t epoch_budget = 0;
};

struct SearchRun {
  std::shared_ptr<const LatticeSpec> lattice;
  std::uint64_t seed = 0;
  std::size_t epochs_per_trial = kDefaultProbeEpochs;
  RankHistory rank_history;
  std::vector<StepRecord> steps;
  std::map<Exponents, Evaluation> evaluations;  // every configuration this run touched
  std::size_t epoch_budget = 0;                 // epochs_per_trial * evaluations.size()
  Verdict verdict = Verdict::running;
  std::optional<HpConfig> selected;
};

/// Trust-region search on the lattice: bootstrap toward Z >= threshold, then descend on Z until
/// the stabilized rank history plateaus. The returned center at termination is lambda*.
SearchRun autohyper(const HpConfig& start, CachedEvaluator& evaluator,
                    const SearchOptions& options = {});

SearchRun autohyper(const HpConfig& start, const Evaluator& evaluator, std::uint64_t seed,
                    const SearchOptions& options = {});

/// Smallest Euclidean delta norm first, then lexicographic delta order.
bool delta_precedes(const Exponents& a, const Exponents& b);

inline constexpr std::size_t kStepLogTail = 5;

/// One JSON object per line per step.
void write_step_log(std::ostream& out, const SearchRun& run);

struct SweepRow {
  HpConfig config;
  Evaluation evaluation;
};

struct SweepTable {
  std::uint64_t seed = 0;
  std::size_t epochs_per_trial = kDefaultProbeEpochs;
  std::vector<SweepRow> rows;
  std::size_t distinct_evaluations = 0;
  std::size_t epoch_budget = 0;
};

/// Evaluates every grid point through the cache; duplicates cost nothing.
SweepTable sweep(std::span<const HpConfig> grid, CachedEvaluator& evaluator,
                 std::size_t threads = 1);

void write_sweep_csv_header(std::ostream& out, const LatticeSpec& lattice, std::size_t epochs);
void write_sweep_csv_rows(std::ostream& out, const SweepTable& table);

}  // namespace autohyper
