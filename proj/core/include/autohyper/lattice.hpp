#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autohyper {

inline constexpr int kMaxExponent = 64;
inline constexpr double kDefaultStepFactor = 1.5;

using Exponents = std::vector<int>;

// Multiplicative grid: value_i = anchor_i * alpha_i^k_i. Fixed for the lifetime of a run.
class LatticeSpec {
 public:
  LatticeSpec(std::vector<std::string> names, std::vector<double> anchors,
              std::vector<double> alphas);

  std::size_t dimension() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& anchors() const { return anchors_; }
  const std::vector<double>& alphas() const { return alphas_; }

  double value(std::size_t i, int exponent) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> anchors_;
  std::vector<double> alphas_;
};

// Concrete hyper-parameter values handed to an evaluator. `id` names the configuration in
// logs, CSVs and snapshot directories.
struct HpPoint {
  std::vector<std::string> names;
  std::vector<double> values;
  std::string id;

  std::optional<double> find(std::string_view name) const;
};

/// A lattice point. Equality compares exponent vectors only, so caching never compares floats.
class HpConfig {
 public:
  HpConfig(std::shared_ptr<const LatticeSpec> lattice, Exponents exponents);

  const LatticeSpec& lattice() const { return *lattice_; }
  const std::shared_ptr<const LatticeSpec>& lattice_ptr() const { return lattice_; }
  const Exponents& exponents() const { return exponents_; }

  double value(std::size_t i) const { return lattice_->value(i, exponents_[i]); }
  std::vector<double> values() const;

  /// e.g. "lr_+0__weight_decay_-2"
  std::string id() const;
  HpPoint point() const;

  HpConfig shifted(const Exponents& delta) const;

  bool operator==(const HpConfig& other) const { return exponents_ == other.exponents_; }

 private:
  std::shared_ptr<const LatticeSpec> lattice_;
  Exponents exponents_;
};

std::string config_id(const LatticeSpec& lattice, const Exponents& exponents);

struct TrustRegion {
  HpConfig center;
  std::vector<HpConfig> members;
  std::vector<Exponents> deltas;  // members[i] == center shifted by deltas[i]
  bool truncated = false;         // some +-1 steps fell outside the exponent bound
};

/// All combinations of k_i + {-1, 0, +1}, lexicographic in the per-HP delta (first HP
/// outermost). Steps beyond +-kMaxExponent are dropped and the region is flagged truncated.
TrustRegion trust_region(const HpConfig& center);

/// Cartesian product of per-HP inclusive exponent ranges, first HP outermost.
std::vector<HpConfig> lattice_grid(const std::shared_ptr<const LatticeSpec>& lattice,
                                   const std::vector<std::pair<int, int>>& exponent_ranges);

}  // namespace autohyper
