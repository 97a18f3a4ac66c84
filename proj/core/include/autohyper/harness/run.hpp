#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "autohyper/harness/config.hpp"
#include "autohyper/harness/report.hpp"
#include "autohyper/metrics.hpp"

namespace autohyper::harness {

struct RunOptions {
  std::optional<std::filesystem::path> output;        // overrides the config's output
  std::optional<std::vector<std::uint64_t>> seeds;    // overrides the config's seeds
  std::ostream* log = nullptr;                        // progress messages; null is quiet
};

struct RunOutcome {
  RunReport report;
  std::filesystem::path output;
  int exit_code = 0;  // nonzero when any search did not converge
};

/// Executes one experiment and writes report.json, steps.jsonl, sweep.csv and probe.csv
/// (whichever apply to the mode) into the output directory.
RunOutcome run(RunConfig config, const RunOptions& options = {});
RunOutcome run(const std::filesystem::path& config_path, const RunOptions& options = {});

struct ProbeOutcome {
  RankProbe probe;
  std::vector<double> z_per_epoch;
  double z = 1.0;
  bool boundary = false;  // Z == 1: no probed layer retained any rank
};

/// Probes epoch_001.snap .. epoch_T.snap in `directory`; writes <output>/probe.csv when an
/// output directory is given.
ProbeOutcome probe_snapshots(const std::filesystem::path& directory,
                             const std::optional<std::filesystem::path>& output = std::nullopt,
                             std::ostream* log = nullptr);

}  // namespace autohyper::harness
