#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "autohyper/error.hpp"
#include "autohyper/harness/config.hpp"
#include "autohyper/harness/report.hpp"
#include "autohyper/harness/run.hpp"

namespace fs = std::filesystem;
using namespace autohyper;

namespace {

// Exit codes: 0 ok, 1 a search did not converge, 2 bad configuration or input, 3 other failure.
constexpr int kExitNotConverged = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autohyper: rank-based hyper-parameter search for small CNNs"};
  app.require_subcommand(1);

  bool quiet = false;
  app.add_flag("--quiet,-q", quiet, "Suppress progress output");

  auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a config file");
  std::string config_path, run_out, seeds_csv;
  run_cmd->add_option("--config", config_path, "Config file (dotted key = value)")->required();
  run_cmd->add_option("--out", run_out, "Output directory (overrides 'output')");
  run_cmd->add_option("--seeds", seeds_csv, "Comma-separated seeds (overrides 'seeds')");
  run_cmd->add_flag("--quiet,-q", quiet, "Suppress progress output");

  auto* probe_cmd = app.add_subcommand("probe", "Probe a directory of epoch_NNN.snap files");
  std::string probe_dir, probe_out;
  probe_cmd->add_option("dir", probe_dir, "Snapshot directory")->required();
  probe_cmd->add_option("--out", probe_out, "Write probe.csv here");
  probe_cmd->add_flag("--quiet,-q", quiet, "Suppress progress output");

  auto* compare_cmd = app.add_subcommand("compare", "Compare two run reports");
  std::string report_a, report_b, compare_out;
  compare_cmd->add_option("a", report_a, "First report.json")->required();
  compare_cmd->add_option("b", report_b, "Second report.json")->required();
  compare_cmd->add_option("--out", compare_out, "Also write the table to this file");

  CLI11_PARSE(app, argc, argv);
  std::ostream* log = quiet ? nullptr : &std::cerr;

  try {
    if (*run_cmd) {
      harness::RunOptions options;
      options.log = log;
      if (!run_out.empty()) options.output = run_out;
      if (!seeds_csv.empty()) options.seeds = harness::parse_seed_list(seeds_csv);
      const auto outcome = harness::run(fs::path(config_path), options);
      if (!quiet) std::cerr << "wrote " << (outcome.output / "report.json").string() << '\n';
      return outcome.exit_code == 0 ? 0 : kExitNotConverged;
    }
    if (*probe_cmd) {
      std::optional<fs::path> out;
      if (!probe_out.empty()) out = probe_out;
      const auto p = harness::probe_snapshots(probe_dir, out, log);
      std::cout.precision(17);
      std::cout << "Z " << p.z << '\n';
      for (std::size_t t = 0; t < p.z_per_epoch.size(); ++t)
        std::cout << "Z_t" << (t + 1) << ' ' << p.z_per_epoch[t] << '\n';
      return 0;
    }
    if (*compare_cmd) {
      const auto table = harness::compare(harness::read_report(report_a), harness::read_report(report_b));
      harness::write_comparison(std::cout, table);
      if (!compare_out.empty()) {
        std::ofstream out(compare_out);
        if (!out) throw Error("cannot write " + compare_out);
        harness::write_comparison(out, table);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const IncompleteProbeError& e) {
    std::cerr << "incomplete probe: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
