#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "autohyper/random_search.hpp"
#include "autohyper/search.hpp"
#include "autohyper/trainer/dataset.hpp"
#include "autohyper/trainer/optimizer.hpp"

namespace autohyper::harness {

enum class Mode { autohyper, random_search, sweep, probe_snapshots };
enum class EvaluatorKind { builtin, snapshots };

std::string to_string(Mode mode);
std::string to_string(EvaluatorKind kind);

inline constexpr std::size_t kFinalEpochs = 30;

// Hyper-parameters the built-in trainer knows how to apply.
inline constexpr const char* kBuiltinHyperParameters[] = {"lr", "weight_decay", "momentum"};

struct RunConfig {
  Mode mode = Mode::autohyper;

  std::vector<std::string> hp_names;
  std::vector<double> hp_anchors;
  std::vector<double> hp_alphas;

  EvaluatorKind evaluator = EvaluatorKind::builtin;
  trainer::OptimizerConfig optimizer;  // lr / weight_decay here are used when not searched
  trainer::DatasetSpec dataset;
  std::size_t batch_size = 128;
  bool write_snapshots = false;
  std::filesystem::path snapshot_directory;

  std::size_t epochs = kDefaultProbeEpochs;
  SearchOptions search;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output = "autohyper_out";

  std::optional<std::size_t> random_budget_epochs;
  std::filesystem::path random_budget_report;  // take each seed's budget from a prior report
  std::vector<LogUniformBounds> random_bounds;

  std::vector<std::pair<int, int>> sweep_ranges;  // per HP, inclusive exponents
  std::size_t final_epochs = kFinalEpochs;        // 0 skips the final evaluation
};

/// Flat "dotted.key = value" lines; '#' starts a comment. Duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source);

/// Throws ConfigError for unknown keys, malformed values or inconsistent settings.
RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks that need the file system (snapshot directory, IDX files, budget report).
void validate_run_config(const RunConfig& config);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace autohyper::harness
