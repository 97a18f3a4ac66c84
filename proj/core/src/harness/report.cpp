#include "autohyper/harness/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "autohyper/error.hpp"

namespace autohyper::harness {

using json = nlohmann::ordered_json;

namespace {

json to_json(const SeedReport& s) {
  json j = {{"seed", s.seed},
            {"verdict", s.verdict},
            {"selected", s.selected},
            {"selected_exponents", s.selected_exponents},
            {"selected_id", s.selected_id},
            {"epoch_budget", s.epoch_budget},
            {"distinct_evaluations", s.distinct_evaluations},
            {"rank_history", s.rank_history},
            {"stabilized", s.stabilized},
            {"winner_accuracy", nullptr},
            {"final", nullptr},
            {"divergences", s.divergences}};
  if (s.winner_accuracy) j["winner_accuracy"] = *s.winner_accuracy;
  if (s.final) {
    j["final"] = {{"epochs", s.final->epochs},
                  {"train_accuracy", s.final->train_accuracy},
                  {"heldout_accuracy", nullptr},
                  {"divergent", s.final->divergent}};
    if (s.final->heldout_accuracy) j["final"]["heldout_accuracy"] = *s.final->heldout_accuracy;
  }
  return j;
}

SeedReport seed_from_json(const json& j) {
  SeedReport s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.verdict = j.at("verdict").get<std::string>();
  s.selected = j.at("selected").get<std::vector<double>>();
  s.selected_exponents = j.at("selected_exponents").get<std::vector<int>>();
  s.selected_id = j.at("selected_id").get<std::string>();
  s.epoch_budget = j.at("epoch_budget").get<std::size_t>();
  s.distinct_evaluations = j.at("distinct_evaluations").get<std::size_t>();
  s.rank_history = j.at("rank_history").get<std::vector<double>>();
  s.stabilized = j.at("stabilized").get<std::vector<double>>();
  if (!j.at("winner_accuracy").is_null()) s.winner_accuracy = j["winner_accuracy"].get<double>();
  if (const auto& f = j.at("final"); !f.is_null()) {
    FinalAccuracy fa;
    fa.epochs = f.at("epochs").get<std::size_t>();
    fa.train_accuracy = f.at("train_accuracy").get<double>();
    if (!f.at("heldout_accuracy").is_null()) fa.heldout_accuracy = f["heldout_accuracy"].get<double>();
    fa.divergent = f.at("divergent").get<bool>();
    s.final = fa;
  }
  s.divergences = j.at("divergences").get<std::vector<std::string>>();
  return s;
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

const SeedReport* RunReport::find_seed(std::uint64_t seed) const {
  for (const auto& s : seeds)
    if (s.seed == seed) return &s;
  return nullptr;
}

void write_report(std::ostream& out, const RunReport& r) {
  json seeds = json::array();
  json timing = json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back(to_json(s));
    timing.push_back({{"seed", s.seed}, {"wall_clock_seconds", s.wall_clock_seconds}});
  }
  json j = {{"header", r.header},
            {"mode", r.mode},
            {"evaluator", r.evaluator},
            {"optimizer", r.optimizer},
            {"dataset", r.dataset},
            {"hp_names", r.hp_names},
            {"epochs_per_trial", r.epochs_per_trial},
            {"final_epochs", r.final_epochs},
            {"seeds", seeds},
            {"timing", {{"started_at", r.started_at}, {"finished_at", r.finished_at}, {"runs", timing}}}};
  out << j.dump(2) << '\n';
}

void write_report(const std::filesystem::path& path, const RunReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_report(out, report);
}

RunReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open report " + path.string());
  try {
    const json j = json::parse(in);
    RunReport r;
    r.header = j.at("header").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.evaluator = j.at("evaluator").get<std::string>();
    r.optimizer = j.at("optimizer").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.hp_names = j.at("hp_names").get<std::vector<std::string>>();
    r.epochs_per_trial = j.at("epochs_per_trial").get<std::size_t>();
    r.final_epochs = j.at("final_epochs").get<std::size_t>();
    for (const auto& s : j.at("seeds")) r.seeds.push_back(seed_from_json(s));
    const auto& timing = j.at("timing");
    r.started_at = timing.at("started_at").get<std::string>();
    r.finished_at = timing.at("finished_at").get<std::string>();
    for (const auto& t : timing.at("runs")) {
      const auto seed = t.at("seed").get<std::uint64_t>();
      for (auto& s : r.seeds)
        if (s.seed == seed) s.wall_clock_seconds = t.at("wall_clock_seconds").get<double>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed report: " + e.what());
  }
}

Comparison compare(const RunReport& a, const RunReport& b) {
  if (a.optimizer != b.optimizer)
    throw ValidationError("reports use different optimizers: " + a.optimizer + " vs " + b.optimizer);
  if (a.dataset != b.dataset)
    throw ValidationError("reports use different datasets: " + a.dataset + " vs " + b.dataset);
  if (a.hp_names != b.hp_names) throw ValidationError("reports tune different hyper-parameters");
  if (a.final_epochs != b.final_epochs)
    throw ValidationError("reports use different final evaluation lengths");

  Comparison table;
  table.hp_names = a.hp_names;
  table.final_epochs = a.final_epochs;
  for (const RunReport* r : {&a, &b}) {
    if (r->seeds.empty()) throw ValidationError("report for " + r->mode + " has no seeds");
    CompareRow row;
    row.label = r->mode;
    row.seeds = r->seeds.size();
    std::vector<double> budget, acc, heldout;
    std::vector<std::vector<double>> selected(r->hp_names.size());
    for (const auto& s : r->seeds) {
      if (!s.final) throw ValidationError("report for " + r->mode + " lacks a final evaluation");
      if (s.selected.size() != r->hp_names.size())
        throw ValidationError("report for " + r->mode + " has no selected configuration");
      for (std::size_t i = 0; i < s.selected.size(); ++i) selected[i].push_back(s.selected[i]);
      budget.push_back(static_cast<double>(s.epoch_budget));
      acc.push_back(s.final->train_accuracy);
      if (s.final->heldout_accuracy) heldout.push_back(*s.final->heldout_accuracy);
    }
    row.selected_mean.resize(selected.size());
    row.selected_sd.resize(selected.size());
    for (std::size_t i = 0; i < selected.size(); ++i) mean_sd(selected[i], row.selected_mean[i], row.selected_sd[i]);
    mean_sd(budget, row.budget_mean, row.budget_sd);
    mean_sd(acc, row.accuracy_mean, row.accuracy_sd);
    if (heldout.size() == r->seeds.size()) {
      double m = 0.0, sd = 0.0;
      mean_sd(heldout, m, sd);
      row.heldout_mean = m;
      row.heldout_sd = sd;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_comparison(std::ostream& out, const Comparison& table) {
  const auto pm = [](double mean, double sd, const char* spec) {
    char buf[96];
    const std::string f = std::string(spec) + " +- " + spec;
    std::snprintf(buf, sizeof buf, f.c_str(), mean, sd);
    return std::string(buf);
  };
  const auto cell = [&out](const std::string& text, int width) {
    out << std::setw(width) << text;
  };
  out << std::left << std::setw(16) << "method" << std::right << std::setw(6) << "seeds";
  for (const auto& name : table.hp_names) cell(name, 24);
  const std::string at = " @" + std::to_string(table.final_epochs);
  cell("epoch budget", 20);
  cell("train acc" + at, 22);
  cell("heldout acc" + at, 22);
  out << '\n';
  for (const auto& row : table.rows) {
    out << std::left << std::setw(16) << row.label << std::right << std::setw(6) << row.seeds;
    for (std::size_t i = 0; i < row.selected_mean.size(); ++i)
      cell(pm(row.selected_mean[i], row.selected_sd[i], "%.4g"), 24);
    cell(pm(row.budget_mean, row.budget_sd, "%.1f"), 20);
    cell(pm(row.accuracy_mean, row.accuracy_sd, "%.4f"), 22);
    cell(row.heldout_mean ? pm(*row.heldout_mean, *row.heldout_sd, "%.4f") : "n/a", 22);
    out << '\n';
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace autohyper::harness
