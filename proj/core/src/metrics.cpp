#include "autohyper/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <utility>

#include "autohyper/error.hpp"

namespace autohyper {

double stable_rank(const FactorizationResult& fact, std::size_t channel_dim) {
  if (fact.rank == 0) return 0.0;
  if (channel_dim < fact.rank) {
    throw ValidationError("channel dimension " + std::to_string(channel_dim) +
                          " is smaller than the retained rank " + std::to_string(fact.rank));
  }
  if (fact.shrunk_singular_values.size() != fact.rank) {
    throw ValidationError("factorization rank disagrees with its shrunk spectrum");
  }
  double sum = 0.0;
  for (double d : fact.shrunk_singular_values) sum += d;
  return sum / (static_cast<double>(channel_dim) * fact.shrunk_singular_values.front());
}

RankProbe::RankProbe(std::vector<std::string> layer_names, std::size_t epochs)
    : names_(std::move(layer_names)), epochs_(epochs), cells_(names_.size() * 2 * epochs) {}

std::size_t RankProbe::index(std::size_t layer, int mode, std::size_t epoch) const {
  if (mode != 3 && mode != 4) throw DomainError("probe mode must be 3 or 4");
  if (layer >= names_.size() || epoch >= epochs_) {
    throw ValidationError("probe cell (layer " + std::to_string(layer) + ", epoch " +
                          std::to_string(epoch) + ") is outside the " +
                          std::to_string(names_.size()) + "x" + std::to_string(epochs_) + " grid");
  }
  return (epoch * names_.size() + layer) * 2 + static_cast<std::size_t>(mode - 3);
}

void RankProbe::set(std::size_t layer, int mode, std::size_t epoch, double g) {
  if (!(g >= 0.0 && g <= 1.0)) {
    throw ValidationError("stable rank " + std::to_string(g) + " is outside [0, 1]");
  }
  cells_[index(layer, mode, epoch)] = g;
}

std::optional<double> RankProbe::get(std::size_t layer, int mode, std::size_t epoch) const {
  return cells_[index(layer, mode, epoch)];
}

bool RankProbe::complete_at(std::size_t epoch) const {
  if (epoch >= epochs_) return false;
  for (std::size_t l = 0; l < names_.size(); ++l) {
    for (int mode : kProbedModes) {
      if (!cells_[index(l, mode, epoch)]) return false;
    }
  }
  return true;
}

bool RankProbe::complete() const {
  for (const auto& c : cells_) {
    if (!c) return false;
  }
  return true;
}

double zero_rank_fraction(const RankProbe& probe, std::size_t epoch) {
  if (probe.layers() == 0) throw ValidationError("probe has no layers");
  std::size_t zeros = 0;
  for (std::size_t l = 0; l < probe.layers(); ++l) {
    for (int mode : kProbedModes) {
      const auto g = probe.get(l, mode, epoch);
      if (!g) {
        throw IncompleteProbeError("probe is missing layer " + std::to_string(l) + " mode " +
                                   std::to_string(mode) + " at epoch " + std::to_string(epoch + 1));
      }
      if (*g == 0.0) ++zeros;
    }
  }
  return static_cast<double>(zeros) / static_cast<double>(2 * probe.layers());
}

std::vector<double> zero_rank_fractions(const RankProbe& probe) {
  std::vector<double> z(probe.epochs());
  for (std::size_t t = 0; t < probe.epochs(); ++t) z[t] = zero_rank_fraction(probe, t);
  return z;
}

double global_stable_rank(const RankProbe& probe) {
  if (probe.epochs() == 0) throw ValidationError("global stable rank needs T >= 1 epochs");
  double sum = 0.0;
  for (double z : zero_rank_fractions(probe)) sum += z;
  return sum / static_cast<double>(probe.epochs());
}

std::vector<double> stabilize(std::span<const double> values) {
  RankHistory history;
  for (double v : values) history.append(v);
  return history.stabilized();
}

void RankHistory::append(double z) {
  // Z = 1 is reachable (all cells rank-0, or a diverged trial), so the closed interval is accepted.
  if (!(z >= 0.0 && z <= 1.0)) {
    throw ValidationError("rank-history value " + std::to_string(z) + " is outside [0, 1]");
  }
  values_.push_back(z);
  if (z == 0.0) absorbed_ = true;
  if (absorbed_) {
    stabilized_.push_back(0.0);
    return;
  }
  log_sum_ += std::log(z);
  stabilized_.push_back(std::exp(kStabilizationPower * log_sum_));
}

double probe_stable_rank(const WeightTensor4D& tensor, int mode) {
  const UnfoldedMatrix unfolded = unfold(tensor, mode);
  return stable_rank(evbmf(unfolded), unfolded.rows());
}

RankProbe probe_weight_sets(std::span<const WeightSet> epochs) {
  if (epochs.empty()) throw ValidationError("probe needs at least one epoch of weights");
  std::vector<std::string> names;
  for (const auto& w : epochs.front()) names.push_back(w.layer_name());
  RankProbe probe(names, epochs.size());
  for (std::size_t t = 0; t < epochs.size(); ++t) {
    const WeightSet& set = epochs[t];
    if (set.size() != names.size()) {
      throw ValidationError("epoch " + std::to_string(t + 1) + " has " + std::to_string(set.size()) +
                            " layers, expected " + std::to_string(names.size()));
    }
    for (std::size_t l = 0; l < set.size(); ++l) {
      if (set[l].layer_name() != names[l]) {
        throw ValidationError("epoch " + std::to_string(t + 1) + " layer " + std::to_string(l) +
                              " is '" + set[l].layer_name() + "', expected '" + names[l] + "'");
      }
      for (int mode : kProbedModes) probe.set(l, mode, t, probe_stable_rank(set[l], mode));
    }
  }
  return probe;
}

void write_probe_csv_header(std::ostream& out) {
  out << "config_id,layer,mode,epoch,G,Z_t,Z\n";
}

void write_probe_csv_rows(std::ostream& out, const RankProbe& probe, std::string_view config_id) {
  const std::vector<double> zt = zero_rank_fractions(probe);
  const double z = global_stable_rank(probe);
  const auto old_precision = out.precision(17);
  for (std::size_t t = 0; t < probe.epochs(); ++t) {
    for (std::size_t l = 0; l < probe.layers(); ++l) {
      for (int mode : kProbedModes) {
        out << config_id << ',' << probe.layer_names()[l] << ',' << mode << ',' << t + 1 << ','
            << *probe.get(l, mode, t) << ',' << zt[t] << ',' << z << '\n';
      }
    }
  }
  out.precision(old_precision);
}

}  // namespace autohyper
