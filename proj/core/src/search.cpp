#include "autohyper/search.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <utility>

#include "autohyper/error.hpp"
#include "autohyper/parallel.hpp"
#include "json.hpp"

namespace autohyper {

using nlohmann::json;

EvaluationCache::Lookup EvaluationCache::get_or_compute(const Exponents& key,
                                                        const std::function<Evaluation()>& compute) {
  std::promise<Evaluation> promise;
  {
    std::unique_lock lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      auto future = it->second;
      lock.unlock();
      return {future.get(), true};
    }
    entries_.emplace(key, promise.get_future().share());
  }
  try {
    Evaluation result = compute();
    promise.set_value(result);
    return {std::move(result), false};
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::optional<Evaluation> EvaluationCache::find(const Exponents& key) const {
  std::shared_future<Evaluation> future;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    future = it->second;
  }
  return future.get();
}

std::size_t EvaluationCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

CachedEvaluator::CachedEvaluator(const Evaluator& evaluator, std::uint64_t seed)
    : evaluator_(evaluator), seed_(seed) {}

EvaluationCache::Lookup CachedEvaluator::evaluate(const HpConfig& config) {
  {
    std::lock_guard lock(log_mu_);
    if (!lattice_) {
      lattice_ = config.lattice_ptr();
    } else if (lattice_ != config.lattice_ptr() &&
               (lattice_->names() != config.lattice().names() ||
                lattice_->anchors() != config.lattice().anchors() ||
                lattice_->alphas() != config.lattice().alphas())) {
      throw ValidationError("cached evaluator used with two different lattices");
    }
  }
  return cache_.get_or_compute(config.exponents(), [&] {
    const HpPoint point = config.point();
    Evaluation e;
    try {
      e = evaluator_.evaluate(point, seed_);
    } catch (const NumericalError& err) {
      e = Evaluation{};
      e.divergent = true;
      e.note = err.what();
    }
    if (e.divergent) {
      e.z = 1.0;
      std::lock_guard lock(log_mu_);
      divergence_log_.push_back(point.id + ": " + (e.note.empty() ? "diverged" : e.note));
    }
    return e;
  });
}

std::vector<EvaluationCache::Lookup> CachedEvaluator::evaluate_all(std::span<const HpConfig> configs,
                                                                   std::size_t threads) {
  std::vector<EvaluationCache::Lookup> out(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t i) { out[i] = evaluate(configs[i]); });
  return out;
}

std::vector<std::string> CachedEvaluator::divergence_log() const {
  std::lock_guard lock(log_mu_);
  return divergence_log_;
}

std::string to_string(Phase phase) { return phase == Phase::bootstrap ? "bootstrap" : "descent"; }

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::running: return "running";
    case Verdict::converged: return "converged";
    case Verdict::budget_exhausted: return "budget_exhausted";
    case Verdict::no_bootstrap: return "no_bootstrap";
  }
  return "unknown";
}

bool delta_precedes(const Exponents& a, const Exponents& b) {
  long na = 0, nb = 0;
  for (int v : a) na += static_cast<long>(v) * v;
  for (int v : b) nb += static_cast<long>(v) * v;
  if (na != nb) return na < nb;
  return a < b;
}

namespace {

template <typename Better>
std::size_t pick_member(const std::vector<MemberRecord>& members, Better better) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < members.size(); ++i) {
    const double zi = members[i].z, zb = members[best].z;
    if (better(zi, zb) || (zi == zb && delta_precedes(members[i].delta, members[best].delta))) {
      best = i;
    }
  }
  return best;
}

std::vector<double> tail(const std::vector<double>& v) {
  const std::size_t n = std::min(v.size(), kStepLogTail);
  return {v.end() - static_cast<std::ptrdiff_t>(n), v.end()};
}

}  // namespace

SearchRun autohyper(const HpConfig& start, CachedEvaluator& evaluator, const SearchOptions& options) {
  if (options.max_steps == 0) throw ValidationError("max_steps must be positive");
  if (!(options.epsilon_plateau > 0.0)) throw ValidationError("plateau tolerance must be positive");

  SearchRun run;
  run.lattice = start.lattice_ptr();
  run.seed = evaluator.seed();
  run.epochs_per_trial = evaluator.epochs_per_trial();

  HpConfig center = start;
  Phase phase = Phase::bootstrap;
  bool armed = false;

  for (std::size_t step = 0; step < options.max_steps; ++step) {
    const TrustRegion region = trust_region(center);
    const auto lookups = evaluator.evaluate_all(region.members, options.threads);

    StepRecord record;
    record.step = step;
    record.center = center.exponents();
    record.truncated = region.truncated;
    for (std::size_t i = 0; i < region.members.size(); ++i) {
      const HpConfig& m = region.members[i];
      const bool seen = run.evaluations.count(m.exponents()) > 0;
      if (!seen) {
        run.evaluations.emplace(m.exponents(), lookups[i].evaluation);
        ++record.new_evaluations;
      }
      record.members.push_back(MemberRecord{region.deltas[i], m.exponents(), m.values(),
                                            lookups[i].evaluation.z,
                                            lookups[i].evaluation.divergent, seen});
    }
    run.epoch_budget = run.epochs_per_trial * run.evaluations.size();
    record.epoch_budget = run.epoch_budget;

    // A member at Z == 0 is already the absorbing optimum, so there is nothing to climb out of.
    const bool all_below = std::all_of(record.members.begin(), record.members.end(), [&](const auto& m) {
      return m.z < options.bootstrap_threshold;
    }) && std::none_of(record.members.begin(), record.members.end(), [](const auto& m) { return m.z == 0.0; });

    bool plateau = false;
    if (phase == Phase::bootstrap && all_below) {
      record.phase = Phase::bootstrap;
      record.chosen = pick_member(record.members, std::greater<>{});
      center = region.members[record.chosen];
    } else {
      phase = Phase::descent;
      record.phase = Phase::descent;
      record.chosen = pick_member(record.members, std::less<>{});
      center = region.members[record.chosen];
      const double z_min = record.members[record.chosen].z;
      run.rank_history.append(z_min);

      // Fires on the first sub-tolerance change after the stabilized sequence has started to
      // move; Z == 0 is absorbing and ends the search at once.
      const auto& c = run.rank_history.stabilized();
      if (z_min == 0.0) {
        plateau = true;
      } else if (c.size() >= 2) {
        const double change = std::abs(c[c.size() - 2] - c.back());
        if (change >= options.epsilon_plateau) {
          armed = true;
        } else if (armed) {
          plateau = true;
        }
      }
    }
    record.rank_history_tail = tail(run.rank_history.values());
    record.stabilized_tail = tail(run.rank_history.stabilized());
    run.steps.push_back(std::move(record));

    if (plateau) {
      run.verdict = Verdict::converged;
      run.selected = center;
      return run;
    }
  }
  run.verdict = phase == Phase::bootstrap ? Verdict::no_bootstrap : Verdict::budget_exhausted;
  run.selected = center;
  return run;
}

SearchRun autohyper(const HpConfig& start, const Evaluator& evaluator, std::uint64_t seed,
                    const SearchOptions& options) {
  CachedEvaluator cached(evaluator, seed);
  return autohyper(start, cached, options);
}

void write_step_log(std::ostream& out, const SearchRun& run) {
  for (const StepRecord& s : run.steps) {
    json members = json::array();
    json z_values = json::array();
    for (const MemberRecord& m : s.members) {
      members.push_back({{"delta", m.delta},
                         {"exponents", m.exponents},
                         {"values", m.values},
                         {"Z", m.z},
                         {"divergent", m.divergent},
                         {"cached", m.cached}});
      z_values.push_back(m.z);
    }
    json line = {{"seed", run.seed},
                 {"step", s.step},
                 {"phase", to_string(s.phase)},
                 {"center_exponents", s.center},
                 {"truncated_region", s.truncated},
                 {"members", members},
                 {"member_Z_values", z_values},
                 {"chosen", s.chosen},
                 {"chosen_exponents", s.members[s.chosen].exponents},
                 {"new_evaluations", s.new_evaluations},
                 {"rank_history_tail", s.rank_history_tail},
                 {"stabilized_tail", s.stabilized_tail},
                 {"epoch_budget", s.epoch_budget}};
    out << line.dump() << '\n';
  }
}

SweepTable sweep(std::span<const HpConfig> grid, CachedEvaluator& evaluator, std::size_t threads) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  const auto lookups = evaluator.evaluate_all(grid, threads);
  SweepTable table;
  table.seed = evaluator.seed();
  table.epochs_per_trial = evaluator.epochs_per_trial();
  std::set<Exponents> distinct;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    distinct.insert(grid[i].exponents());
    table.rows.push_back(SweepRow{grid[i], lookups[i].evaluation});
  }
  table.distinct_evaluations = distinct.size();
  table.epoch_budget = table.epochs_per_trial * distinct.size();
  return table;
}

void write_sweep_csv_header(std::ostream& out, const LatticeSpec& lattice, std::size_t epochs) {
  out << "seed,config_id";
  for (const auto& name : lattice.names()) out << ',' << name << "_exponent";
  for (const auto& name : lattice.names()) out << ',' << name;
  out << ",Z";
  for (std::size_t t = 1; t <= epochs; ++t) out << ",Z_t" << t;
  out << ",divergent\n";
}

void write_sweep_csv_rows(std::ostream& out, const SweepTable& table) {
  const auto old_precision = out.precision(17);
  for (const SweepRow& row : table.rows) {
    out << table.seed << ',' << row.config.id();
    for (int k : row.config.exponents()) out << ',' << k;
    for (double v : row.config.values()) out << ',' << v;
    out << ',' << row.evaluation.z;
    for (std::size_t t = 0; t < table.epochs_per_trial; ++t) {
      out << ',';
      if (t < row.evaluation.z_per_epoch.size()) out << row.evaluation.z_per_epoch[t];
    }
    out << ',' << (row.evaluation.divergent ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace autohyper
