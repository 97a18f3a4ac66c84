#include "autohyper/harness/run.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include "autohyper/error.hpp"
#include "autohyper/harness/evaluators.hpp"
#include "autohyper/random_search.hpp"
#include "autohyper/search.hpp"

namespace autohyper::harness {

namespace fs = std::filesystem;

namespace {

std::string describe(const trainer::DatasetSpec& d) {
  std::ostringstream s;
  s << to_string(d.source);
  if (d.source == trainer::DatasetSource::synthetic_shapes) {
    s << "(train=" << d.train_size << ",heldout=" << d.heldout_size << ",size=" << d.image_size
      << ",noise=" << d.pixel_noise << ",seed=" << d.seed << ")";
  } else {
    s << "(" << d.idx_images.string() << "," << d.idx_labels.string() << ")";
  }
  return s.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void note(std::ostream* log, const std::string& message) {
  if (log != nullptr) *log << message << std::endl;
}

FinalAccuracy to_report(const FinalEvaluation& f) {
  return FinalAccuracy{f.epochs, f.train_accuracy, f.heldout_accuracy, f.divergent};
}

// Per-seed random-search budgets, resolved before any training starts.
std::vector<std::size_t> random_budgets(const RunConfig& c) {
  std::vector<std::size_t> budgets;
  std::optional<RunReport> prior;
  if (!c.random_budget_report.empty()) {
    try {
      prior = read_report(c.random_budget_report);
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }
  for (auto seed : c.seeds) {
    if (prior) {
      const SeedReport* s = prior->find_seed(seed);
      if (s == nullptr)
        throw ConfigError(c.random_budget_report.string() + " has no entry for seed " + std::to_string(seed));
      budgets.push_back(s->epoch_budget);
    } else {
      budgets.push_back(*c.random_budget_epochs);
    }
    if (budgets.back() < c.epochs)
      throw ConfigError("random-search budget of " + std::to_string(budgets.back()) +
                        " epochs is below one " + std::to_string(c.epochs) + "-epoch trial");
  }
  return budgets;
}

}  // namespace

ProbeOutcome probe_snapshots(const fs::path& directory, const std::optional<fs::path>& output,
                             std::ostream* log) {
  if (!fs::is_directory(directory))
    throw ConfigError("snapshot directory does not exist: " + directory.string());
  const auto snapshots = read_snapshot_sequence(directory);
  const Evaluation e = evaluate_snapshots(snapshots);
  ProbeOutcome out{*e.probe, e.z_per_epoch, e.z, e.z == 1.0};
  if (output) {
    fs::create_directories(*output);
    auto csv = open_output(*output / "probe.csv");
    write_probe_csv_header(csv);
    write_probe_csv_rows(csv, out.probe, directory.filename().string());
  }
  if (out.boundary)
    note(log, "warning: Z = 1 for " + directory.string() +
                  ": every probed layer has EVBMF rank 0 in every epoch");
  return out;
}

RunOutcome run(const fs::path& config_path, const RunOptions& options) {
  return run(load_run_config(config_path), options);
}

RunOutcome run(RunConfig c, const RunOptions& options) {
  if (options.output) c.output = *options.output;
  if (options.seeds) {
    if (options.seeds->empty()) throw ConfigError("seeds: list is empty");
    c.seeds = *options.seeds;
  }
  validate_run_config(c);
  std::ostream* log = options.log;

  RunOutcome outcome;
  outcome.output = c.output;
  RunReport& report = outcome.report;
  report.mode = to_string(c.mode);
  report.evaluator = to_string(c.evaluator);
  report.optimizer = c.evaluator == EvaluatorKind::builtin ? to_string(c.optimizer.kind) : "external";
  report.dataset = c.evaluator == EvaluatorKind::builtin ? describe(c.dataset) : c.snapshot_directory.string();
  report.hp_names = c.hp_names;
  report.epochs_per_trial = c.epochs;
  report.started_at = utc_timestamp();
  fs::create_directories(c.output);

  if (c.mode == Mode::probe_snapshots) {
    const auto p = probe_snapshots(c.snapshot_directory, c.output, log);
    note(log, "Z = " + std::to_string(p.z));
    report.epochs_per_trial = p.probe.epochs();
    report.final_epochs = 0;
    report.finished_at = utc_timestamp();
    write_report(c.output / "report.json", report);
    return outcome;
  }

  const bool builtin = c.evaluator == EvaluatorKind::builtin;
  const std::size_t final_epochs = builtin ? c.final_epochs : 0;
  report.final_epochs = final_epochs;
  const std::vector<std::size_t> budgets =
      c.mode == Mode::random_search ? random_budgets(c) : std::vector<std::size_t>{};

  auto lattice = std::make_shared<const LatticeSpec>(c.hp_names, c.hp_anchors, c.hp_alphas);
  std::unique_ptr<BuiltinEvaluator> builtin_eval;
  std::unique_ptr<SnapshotEvaluator> snapshot_eval;
  trainer::Dataset heldout;
  if (builtin) {
    trainer::TrainConfig base;
    base.optimizer = c.optimizer;
    base.epochs = c.epochs;
    base.batch_size = c.batch_size;
    std::optional<fs::path> snap_root;
    if (c.write_snapshots) snap_root = c.output / "snapshots";
    note(log, "building dataset " + describe(c.dataset));
    builtin_eval = std::make_unique<BuiltinEvaluator>(trainer::make_training_set(c.dataset), base, snap_root);
    if (final_epochs > 0) heldout = trainer::make_heldout_set(c.dataset);
  } else {
    snapshot_eval = std::make_unique<SnapshotEvaluator>(c.snapshot_directory, c.epochs);
  }
  const Evaluator& evaluator = builtin ? static_cast<const Evaluator&>(*builtin_eval) : *snapshot_eval;

  std::optional<std::ofstream> steps, sweep_csv, probe_csv;
  if (c.mode == Mode::autohyper) steps = open_output(c.output / "steps.jsonl");
  if (!c.sweep_ranges.empty()) {
    sweep_csv = open_output(c.output / "sweep.csv");
    write_sweep_csv_header(*sweep_csv, *lattice, c.epochs);
  }
  if (c.mode != Mode::random_search) {
    probe_csv = open_output(c.output / "probe.csv");
    write_probe_csv_header(*probe_csv);
  }
  const auto write_probes = [&](const Exponents& exps, const Evaluation& e) {
    if (probe_csv && e.probe) write_probe_csv_rows(*probe_csv, *e.probe, config_id(*lattice, exps));
  };
  const auto finish = [&](SeedReport& sr, const HpPoint& point) {
    if (final_epochs == 0) return;
    note(log, "  final evaluation of " + point.id + " for " + std::to_string(final_epochs) + " epochs");
    sr.final = to_report(final_evaluation(*builtin_eval, point, sr.seed, final_epochs, &heldout));
  };

  for (std::size_t si = 0; si < c.seeds.size(); ++si) {
    const std::uint64_t seed = c.seeds[si];
    const auto t0 = std::chrono::steady_clock::now();
    SeedReport sr;
    sr.seed = seed;
    note(log, report.mode + " seed " + std::to_string(seed));

    if (c.mode == Mode::random_search) {
      const auto rs = random_search(c.random_bounds, budgets[si], evaluator, seed, c.search.threads);
      const auto& best = rs.best();
      sr.verdict = "completed";
      sr.selected = best.point.values;
      sr.selected_id = best.point.id;
      sr.epoch_budget = rs.epoch_budget;
      sr.distinct_evaluations = rs.samples.size();
      sr.winner_accuracy = best.final_train_accuracy;
      for (const auto& s : rs.samples)
        if (s.divergent) sr.divergences.push_back(s.point.id);
      finish(sr, best.point);
    } else {
      CachedEvaluator cached(evaluator, seed);
      std::map<Exponents, Evaluation> probed;
      if (c.mode == Mode::autohyper) {
        const SearchRun result = autohyper(HpConfig(lattice, Exponents(lattice->dimension(), 0)), cached, c.search);
        write_step_log(*steps, result);
        sr.verdict = to_string(result.verdict);
        sr.epoch_budget = result.epoch_budget;
        sr.distinct_evaluations = result.evaluations.size();
        sr.rank_history = result.rank_history.values();
        sr.stabilized = result.rank_history.stabilized();
        probed = result.evaluations;
        if (result.selected) {
          sr.selected = result.selected->values();
          sr.selected_exponents = result.selected->exponents();
          sr.selected_id = result.selected->id();
        }
        note(log, "  " + sr.verdict + " at " + sr.selected_id + " after " +
                      std::to_string(sr.epoch_budget) + " epochs");
      } else {
        sr.verdict = "completed";
      }
      if (!c.sweep_ranges.empty()) {
        const auto grid = lattice_grid(lattice, c.sweep_ranges);
        const SweepTable table = sweep(grid, cached, c.search.threads);
        write_sweep_csv_rows(*sweep_csv, table);
        for (const auto& row : table.rows) probed.emplace(row.config.exponents(), row.evaluation);
        if (c.mode == Mode::sweep) {
          sr.epoch_budget = table.epoch_budget;
          sr.distinct_evaluations = table.distinct_evaluations;
        }
      }
      for (const auto& [exps, e] : probed) write_probes(exps, e);
      sr.divergences = cached.divergence_log();
      if (c.mode == Mode::autohyper && !sr.selected.empty()) {
        HpPoint point = HpConfig(lattice, sr.selected_exponents).point();
        finish(sr, point);
      }
    }
    sr.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.mode == Mode::autohyper && sr.verdict != to_string(Verdict::converged)) outcome.exit_code = 1;
    report.seeds.push_back(std::move(sr));
  }
  report.finished_at = utc_timestamp();
  write_report(c.output / "report.json", report);
  return outcome;
}

}  // namespace autohyper::harness
