#include "autohyper/lattice.hpp"

#include <cmath>
#include <set>
#include <utility>

#include "autohyper/error.hpp"

namespace autohyper {

LatticeSpec::LatticeSpec(std::vector<std::string> names, std::vector<double> anchors,
                         std::vector<double> alphas)
    : names_(std::move(names)), anchors_(std::move(anchors)), alphas_(std::move(alphas)) {
  if (names_.empty()) throw ValidationError("lattice needs at least one hyper-parameter");
  if (anchors_.size() != names_.size() || alphas_.size() != names_.size()) {
    throw ValidationError("lattice names, anchors and step factors must have equal lengths");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty() || !seen.insert(names_[i]).second) {
      throw ValidationError("hyper-parameter names must be non-empty and unique");
    }
    if (!(anchors_[i] > 0.0) || !std::isfinite(anchors_[i])) {
      throw ValidationError("anchor for '" + names_[i] + "' must be positive and finite");
    }
    if (!(alphas_[i] > 1.0) || !std::isfinite(alphas_[i])) {
      throw ValidationError("step factor for '" + names_[i] + "' must exceed 1");
    }
  }
}

double LatticeSpec::value(std::size_t i, int exponent) const {
  return anchors_[i] * std::pow(alphas_[i], exponent);
}

std::optional<std::size_t> LatticeSpec::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<double> HpPoint::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  return std::nullopt;
}

HpConfig::HpConfig(std::shared_ptr<const LatticeSpec> lattice, Exponents exponents)
    : lattice_(std::move(lattice)), exponents_(std::move(exponents)) {
  if (!lattice_) throw ValidationError("configuration has no lattice");
  if (exponents_.size() != lattice_->dimension()) {
    throw ValidationError("configuration has " + std::to_string(exponents_.size()) +
                          " exponents for a " + std::to_string(lattice_->dimension()) +
                          "-dimensional lattice");
  }
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    if (exponents_[i] < -kMaxExponent || exponents_[i] > kMaxExponent) {
      throw ValidationError("exponent " + std::to_string(exponents_[i]) + " for '" +
                            lattice_->names()[i] + "' exceeds the +-64 bound");
    }
    const double v = value(i);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("value of '" + lattice_->names()[i] + "' is not positive and finite");
    }
  }
}

std::vector<double> HpConfig::values() const {
  std::vector<double> v(exponents_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = value(i);
  return v;
}

std::string config_id(const LatticeSpec& lattice, const Exponents& exponents) {
  std::string id;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (i) id += "__";
    id += lattice.names()[i];
    id += exponents[i] >= 0 ? "_+" : "_-";
    id += std::to_string(std::abs(exponents[i]));
  }
  return id;
}

std::string HpConfig::id() const { return config_id(*lattice_, exponents_); }

HpPoint HpConfig::point() const { return HpPoint{lattice_->names(), values(), id()}; }

HpConfig HpConfig::shifted(const Exponents& delta) const {
  Exponents k = exponents_;
  for (std::size_t i = 0; i < k.size(); ++i) k[i] += delta[i];
  return HpConfig(lattice_, std::move(k));
}

TrustRegion trust_region(const HpConfig& center) {
  const std::size_t n = center.exponents().size();
  TrustRegion region{center, {}, {}, false};
  Exponents delta(n, -1);
  while (true) {
    bool inside = true;
    for (std::size_t i = 0; i < n; ++i) {
      const int k = center.exponents()[i] + delta[i];
      if (k < -kMaxExponent || k > kMaxExponent) inside = false;
    }
    if (inside) {
      region.members.push_back(center.shifted(delta));
      region.deltas.push_back(delta);
    } else {
      region.truncated = true;
    }
    // Odometer increment, last HP fastest.
    std::size_t i = n;
    while (i > 0 && delta[i - 1] == 1) delta[--i] = -1;
    if (i == 0) break;
    ++delta[i - 1];
  }
  return region;
}

std::vector<HpConfig> lattice_grid(const std::shared_ptr<const LatticeSpec>& lattice,
                                   const std::vector<std::pair<int, int>>& ranges) {
  if (ranges.size() != lattice->dimension()) {
    throw ValidationError("grid needs one exponent range per hyper-parameter");
  }
  for (const auto& [lo, hi] : ranges) {
    if (lo > hi) throw ValidationError("grid exponent range is empty");
  }
  std::vector<HpConfig> grid;
  Exponents k;
  for (const auto& r : ranges) k.push_back(r.first);
  while (true) {
    grid.emplace_back(lattice, k);
    std::size_t i = k.size();
    while (i > 0 && k[i - 1] == ranges[i - 1].second) {
      --i;
      k[i] = ranges[i].first;
    }
    if (i == 0) break;
    ++k[i - 1];
  }
  return grid;
}

}  // namespace autohyper
