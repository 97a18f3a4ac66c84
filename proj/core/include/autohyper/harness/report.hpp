#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace autohyper::harness {

inline constexpr const char* kReportHeader =
    "Final accuracies come from a 30-epoch desk-scale evaluation run on a small CNN, not a "
    "full-length benchmark training schedule.";

struct FinalAccuracy {
  std::size_t epochs = 0;
  double train_accuracy = 0.0;
  std::optional<double> heldout_accuracy;
  bool divergent = false;
};

struct SeedReport {
  std::uint64_t seed = 0;
  std::string verdict;  // search verdict, or "completed" for the other modes
  std::vector<double> selected;          // lambda* (autohyper) or the winner (random search)
  std::vector<int> selected_exponents;   // empty for random search
  std::string selected_id;
  std::size_t epoch_budget = 0;
  std::size_t distinct_evaluations = 0;
  std::vector<double> rank_history;
  std::vector<double> stabilized;
  std::optional<double> winner_accuracy;  // random search: T-epoch training accuracy
  std::optional<FinalAccuracy> final;
  std::vector<std::string> divergences;
  double wall_clock_seconds = 0.0;
};

struct RunReport {
  std::string header = kReportHeader;
  std::string mode;
  std::string evaluator;
  std::string optimizer;
  std::string dataset;
  std::vector<std::string> hp_names;
  std::size_t epochs_per_trial = 0;
  std::size_t final_epochs = 0;
  std::vector<SeedReport> seeds;
  std::string started_at;  // wall-clock stamps live apart from the reproducible content
  std::string finished_at;

  const SeedReport* find_seed(std::uint64_t seed) const;
};

void write_report(std::ostream& out, const RunReport& report);
void write_report(const std::filesystem::path& path, const RunReport& report);
RunReport read_report(const std::filesystem::path& path);

struct CompareRow {
  std::string label;
  std::size_t seeds = 0;
  std::vector<double> selected_mean;  // per HP, over seeds
  std::vector<double> selected_sd;
  double budget_mean = 0.0;
  double budget_sd = 0.0;
  double accuracy_mean = 0.0;  // final training accuracy
  double accuracy_sd = 0.0;
  std::optional<double> heldout_mean;
  std::optional<double> heldout_sd;
};

struct Comparison {
  std::vector<std::string> hp_names;
  std::size_t final_epochs = 0;
  std::vector<CompareRow> rows;
};

/// Side-by-side summary (mean and sample sd over seeds; sd is 0 for a single seed). Throws
/// ValidationError when the reports use different optimizers, datasets or hyper-parameters,
/// or lack final evaluations.
Comparison compare(const RunReport& a, const RunReport& b);
void write_comparison(std::ostream& out, const Comparison& table);

std::string utc_timestamp();

}  // namespace autohyper::harness
