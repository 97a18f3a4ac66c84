#include "autohyper/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "autohyper/error.hpp"

namespace autohyper::harness {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::autohyper: return "autohyper";
    case Mode::random_search: return "random_search";
    case Mode::sweep: return "sweep";
    case Mode::probe_snapshots: return "probe_snapshots";
  }
  return "unknown";
}

std::string to_string(EvaluatorKind kind) {
  return kind == EvaluatorKind::builtin ? "builtin" : "snapshots";
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

class Reader {
 public:
  Reader(std::map<std::string, std::string> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  std::optional<std::string> take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    std::string value = it->second;
    entries_.erase(it);
    return value;
  }

  // Removes and returns every "prefix.<suffix>" entry.
  std::map<std::string, std::string> take_prefixed(const std::string& prefix) {
    std::map<std::string, std::string> out;
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->first.starts_with(prefix)) {
        out.emplace(it->first.substr(prefix.size()), it->second);
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
    return out;
  }

  double number(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(key, "expected a number, got '" + text + "'");
    return v;
  }

  std::uint64_t count(const std::string& key, const std::string& text) const {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(key, "expected a non-negative integer, got '" + text + "'");
    return v;
  }

  int integer(const std::string& key, const std::string& text) const {
    int v = 0;
    const char* begin = text.data() + (text.starts_with('+') ? 1 : 0);
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) fail(key, "expected an integer, got '" + text + "'");
    return v;
  }

  bool boolean(const std::string& key, const std::string& text) const {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    fail(key, "expected true or false, got '" + text + "'");
  }

  std::vector<double> numbers(const std::string& key, const std::string& text) const {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(number(key, item));
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(source_ + ": " + key + ": " + message);
  }

  void ensure_consumed() const {
    if (!entries_.empty()) throw ConfigError(source_ + ": unknown key '" + entries_.begin()->first + "'");
  }

 private:
  std::map<std::string, std::string> entries_;
  std::string source_;
};

Mode parse_mode(const Reader& r, const std::string& text) {
  if (text == "autohyper") return Mode::autohyper;
  if (text == "random_search") return Mode::random_search;
  if (text == "sweep") return Mode::sweep;
  if (text == "probe_snapshots" || text == "probe") return Mode::probe_snapshots;
  r.fail("mode", "unknown mode '" + text + "'");
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& item : split_list(text)) {
    std::uint64_t v = 0;
    const auto* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("seeds: bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("seeds: list is empty");
  return seeds;
}

std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!entries.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return entries;
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  Reader r(parse_key_values(in, source), source);
  RunConfig c;

  if (auto v = r.take("mode")) c.mode = parse_mode(r, *v);

  if (auto v = r.take("hp.names")) c.hp_names = split_list(*v);
  if (auto v = r.take("hp.anchors")) c.hp_anchors = r.numbers("hp.anchors", *v);
  if (auto v = r.take("hp.alphas")) c.hp_alphas = r.numbers("hp.alphas", *v);
  if (c.hp_alphas.empty() && !c.hp_names.empty()) c.hp_alphas.assign(c.hp_names.size(), kDefaultStepFactor);

  if (auto v = r.take("evaluator")) {
    if (*v == "builtin") c.evaluator = EvaluatorKind::builtin;
    else if (*v == "snapshots") c.evaluator = EvaluatorKind::snapshots;
    else r.fail("evaluator", "expected builtin or snapshots, got '" + *v + "'");
  }

  if (auto v = r.take("builtin.optimizer")) {
    try {
      c.optimizer.kind = trainer::parse_optimizer_kind(*v);
    } catch (const ConfigError& e) {
      r.fail("builtin.optimizer", e.what());
    }
  }
  if (auto v = r.take("builtin.lr")) c.optimizer.lr = r.number("builtin.lr", *v);
  if (auto v = r.take("builtin.weight_decay")) c.optimizer.weight_decay = r.number("builtin.weight_decay", *v);
  if (auto v = r.take("builtin.momentum")) c.optimizer.momentum = r.number("builtin.momentum", *v);
  if (auto v = r.take("builtin.batch_size")) c.batch_size = r.count("builtin.batch_size", *v);
  if (auto v = r.take("builtin.write_snapshots")) c.write_snapshots = r.boolean("builtin.write_snapshots", *v);
  if (auto v = r.take("builtin.dataset")) {
    try {
      c.dataset.source = trainer::parse_dataset_source(*v);
    } catch (const Error& e) {
      r.fail("builtin.dataset", e.what());
    }
  }
  if (auto v = r.take("builtin.train_size")) c.dataset.train_size = r.count("builtin.train_size", *v);
  if (auto v = r.take("builtin.heldout_size")) c.dataset.heldout_size = r.count("builtin.heldout_size", *v);
  if (auto v = r.take("builtin.image_size")) c.dataset.image_size = r.count("builtin.image_size", *v);
  if (auto v = r.take("builtin.pixel_noise")) c.dataset.pixel_noise = r.number("builtin.pixel_noise", *v);
  if (auto v = r.take("builtin.data_seed")) c.dataset.seed = r.count("builtin.data_seed", *v);
  if (auto v = r.take("builtin.idx_images")) c.dataset.idx_images = *v;
  if (auto v = r.take("builtin.idx_labels")) c.dataset.idx_labels = *v;
  if (auto v = r.take("builtin.idx_heldout_images")) c.dataset.idx_heldout_images = *v;
  if (auto v = r.take("builtin.idx_heldout_labels")) c.dataset.idx_heldout_labels = *v;

  if (auto v = r.take("snapshots.directory")) c.snapshot_directory = *v;

  if (auto v = r.take("epochs")) c.epochs = r.count("epochs", *v);
  if (auto v = r.take("search.epsilon_plateau")) c.search.epsilon_plateau = r.number("search.epsilon_plateau", *v);
  if (auto v = r.take("search.max_steps")) c.search.max_steps = r.count("search.max_steps", *v);
  if (auto v = r.take("search.bootstrap_threshold"))
    c.search.bootstrap_threshold = r.number("search.bootstrap_threshold", *v);
  if (auto v = r.take("search.threads")) c.search.threads = r.count("search.threads", *v);

  if (auto v = r.take("seeds")) {
    try {
      c.seeds = parse_seed_list(*v);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": " + e.what());
    }
  }
  if (auto v = r.take("output")) c.output = *v;

  if (auto v = r.take("random_search.budget_epochs")) c.random_budget_epochs = r.count("random_search.budget_epochs", *v);
  if (auto v = r.take("random_search.budget_from_report")) c.random_budget_report = *v;
  const auto bounds = r.take_prefixed("random_search.bounds.");
  const auto ranges = r.take_prefixed("sweep.range.");
  if (auto v = r.take("final.epochs")) c.final_epochs = r.count("final.epochs", *v);
  r.ensure_consumed();

  // Cross-field checks that need no file system access.
  if (c.mode != Mode::probe_snapshots) {
    if (c.hp_names.empty()) r.fail("hp.names", "at least one hyper-parameter is required");
    if (c.hp_anchors.size() != c.hp_names.size()) r.fail("hp.anchors", "need one anchor per name");
    if (c.hp_alphas.size() != c.hp_names.size()) r.fail("hp.alphas", "need one alpha per name");
    if (std::set<std::string>(c.hp_names.begin(), c.hp_names.end()).size() != c.hp_names.size())
      r.fail("hp.names", "duplicate name");
    try {
      LatticeSpec(c.hp_names, c.hp_anchors, c.hp_alphas);
    } catch (const Error& e) {
      r.fail("hp", e.what());
    }
    if (c.seeds.empty()) r.fail("seeds", "list is empty");
  }
  if (c.epochs == 0) r.fail("epochs", "must be at least 1");
  if (c.batch_size == 0) r.fail("builtin.batch_size", "must be at least 1");
  if (c.search.threads == 0) r.fail("search.threads", "must be at least 1");
  if (c.search.max_steps == 0) r.fail("search.max_steps", "must be at least 1");
  if (!(c.search.epsilon_plateau > 0.0)) r.fail("search.epsilon_plateau", "must be positive");
  if (c.evaluator == EvaluatorKind::builtin && c.mode != Mode::probe_snapshots) {
    for (const auto& name : c.hp_names) {
      if (std::ranges::find_if(kBuiltinHyperParameters, [&](const char* k) { return name == k; }) ==
          std::end(kBuiltinHyperParameters))
        r.fail("hp.names", "the built-in trainer cannot apply '" + name + "'");
    }
    if (c.dataset.source == trainer::DatasetSource::idx_files &&
        (c.dataset.idx_images.empty() || c.dataset.idx_labels.empty()))
      r.fail("builtin.dataset", "idx datasets need builtin.idx_images and builtin.idx_labels");
  }
  if ((c.evaluator == EvaluatorKind::snapshots || c.mode == Mode::probe_snapshots) &&
      c.snapshot_directory.empty())
    r.fail("snapshots.directory", "required for the snapshots evaluator");

  for (const auto& [name, text] : bounds) {
    const auto v = r.numbers("random_search.bounds." + name, text);
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] >= v[0]))
      r.fail("random_search.bounds." + name, "expected 'lo, hi' with 0 < lo <= hi");
    c.random_bounds.push_back({name, v[0], v[1]});
  }
  if (c.mode == Mode::random_search) {
    if (c.evaluator != EvaluatorKind::builtin) r.fail("evaluator", "random search needs the built-in trainer");
    if (!c.random_budget_epochs && c.random_budget_report.empty())
      r.fail("random_search", "set budget_epochs or budget_from_report");
    // Search space follows hp.names; unspecified bounds fall back to the defaults.
    std::vector<LogUniformBounds> ordered;
    for (const auto& name : c.hp_names) {
      const auto it = std::ranges::find_if(c.random_bounds, [&](const auto& b) { return b.name == name; });
      if (it != c.random_bounds.end()) {
        ordered.push_back(*it);
      } else {
        try {
          ordered.push_back(default_bounds(name));
        } catch (const Error&) {
          r.fail("random_search.bounds." + name, "no default bounds, please set them");
        }
      }
    }
    for (const auto& b : c.random_bounds)
      if (std::ranges::find(c.hp_names, b.name) == c.hp_names.end())
        r.fail("random_search.bounds." + b.name, "not a searched hyper-parameter");
    c.random_bounds = std::move(ordered);
  }
  for (const auto& [name, text] : ranges) {
    const auto it = std::ranges::find(c.hp_names, name);
    if (it == c.hp_names.end()) r.fail("sweep.range." + name, "not a searched hyper-parameter");
    const auto items = split_list(text);
    if (items.size() != 2) r.fail("sweep.range." + name, "expected 'kmin, kmax'");
    const int lo = r.integer("sweep.range." + name, items[0]);
    const int hi = r.integer("sweep.range." + name, items[1]);
    if (lo > hi || lo < -kMaxExponent || hi > kMaxExponent)
      r.fail("sweep.range." + name, "need -64 <= kmin <= kmax <= 64");
    c.sweep_ranges.resize(c.hp_names.size(), {0, 0});
    c.sweep_ranges[static_cast<std::size_t>(it - c.hp_names.begin())] = {lo, hi};
  }
  if (c.mode == Mode::sweep && ranges.size() != c.hp_names.size())
    r.fail("sweep.range", "sweep mode needs a range for every hyper-parameter");
  if (!ranges.empty() && ranges.size() != c.hp_names.size())
    r.fail("sweep.range", "give a range for every hyper-parameter or none");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_run_config(in, path.string());
}

void validate_run_config(const RunConfig& c) {
  namespace fs = std::filesystem;
  const bool uses_snapshots = c.evaluator == EvaluatorKind::snapshots || c.mode == Mode::probe_snapshots;
  if (uses_snapshots && !fs::is_directory(c.snapshot_directory))
    throw ConfigError("snapshot directory does not exist: " + c.snapshot_directory.string());
  if (c.evaluator == EvaluatorKind::builtin && c.mode != Mode::probe_snapshots &&
      c.dataset.source == trainer::DatasetSource::idx_files) {
    for (const auto& p : {c.dataset.idx_images, c.dataset.idx_labels})
      if (!fs::is_regular_file(p)) throw ConfigError("IDX file not found: " + p.string());
  }
  if (c.mode == Mode::random_search && !c.random_budget_report.empty() &&
      !fs::is_regular_file(c.random_budget_report))
    throw ConfigError("budget report not found: " + c.random_budget_report.string());
}

}  // namespace autohyper::harness
