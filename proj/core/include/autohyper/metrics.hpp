#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autohyper/evbmf.hpp"
#include "autohyper/tensor.hpp"

namespace autohyper {

inline constexpr double kStabilizationPower = 0.8;
inline constexpr int kProbedModes[] = {3, 4};

/// Sum of the retained shrunk singular values normalized by channel_dim * d_1.
/// Exactly 0 for an empty low-rank component, 1 for a full-rank flat spectrum.
double stable_rank(const FactorizationResult& fact, std::size_t channel_dim);

/// Stable-rank grid over (layer, mode in {3,4}, epoch) for one hyper-parameter configuration.
/// Epochs are 0-based indices into the probe epochs 1..T.
class RankProbe {
 public:
  RankProbe(std::vector<std::string> layer_names, std::size_t epochs);

  std::size_t layers() const { return names_.size(); }
  std::size_t epochs() const { return epochs_; }
  const std::vector<std::string>& layer_names() const { return names_; }

  void set(std::size_t layer, int mode, std::size_t epoch, double stable_rank);
  std::optional<double> get(std::size_t layer, int mode, std::size_t epoch) const;

  bool complete_at(std::size_t epoch) const;
  bool complete() const;

 private:
  std::size_t index(std::size_t layer, int mode, std::size_t epoch) const;

  std::vector<std::string> names_;
  std::size_t epochs_;
  std::vector<std::optional<double>> cells_;
};

/// Fraction of (layer, mode) cells at `epoch` whose stable rank is exactly zero.
double zero_rank_fraction(const RankProbe& probe, std::size_t epoch);

std::vector<double> zero_rank_fractions(const RankProbe& probe);

/// Mean of zero_rank_fraction over all probe epochs.
double global_stable_rank(const RankProbe& probe);

/// c_j = (prod_{i<=j} values_i)^0.8, accumulated in log space; a zero is absorbing.
std::vector<double> stabilize(std::span<const double> values);

class RankHistory {
 public:
  void append(double z);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& stabilized() const { return stabilized_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

 private:
  std::vector<double> values_;
  std::vector<double> stabilized_;
  double log_sum_ = 0.0;
  bool absorbed_ = false;
};

using WeightSet = std::vector<WeightTensor4D>;

/// Unfolds `tensor` along `mode`, factorizes with estimated noise, returns its stable rank.
double probe_stable_rank(const WeightTensor4D& tensor, int mode);

/// Builds a complete probe from per-epoch weight sets (epochs 1..T in order). Every set must
/// list the same layers in the same order.
RankProbe probe_weight_sets(std::span<const WeightSet> epochs);

/// CSV rows (config_id, layer, mode, epoch, G, Z_t, Z); epochs written 1-based.
void write_probe_csv_header(std::ostream& out);
void write_probe_csv_rows(std::ostream& out, const RankProbe& probe, std::string_view config_id);

}  // namespace autohyper
