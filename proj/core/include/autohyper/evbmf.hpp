#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "autohyper/tensor.hpp"

namespace autohyper {

// Returned as the noise variance of an all-zero matrix whose variance had to be estimated.
inline constexpr double kMinNoiseVariance = std::numeric_limits<double>::min();

/// Shape constants of the analytic empirical VB solution for an L x M matrix (L <= M).
struct EvbGeometry {
  std::size_t L = 0;
  std::size_t M = 0;
  double alpha = 0.0;    // L / M
  double tau_bar = 0.0;  // 2.5129 * sqrt(alpha)
  double x_bar = 0.0;    // (1 + tau_bar) * (1 + alpha / tau_bar)

  static EvbGeometry make(std::size_t L, std::size_t M);

  /// Singular values strictly above this survive thresholding.
  double threshold(double noise_variance) const;
};

/// EVB free energy as a function of the noise variance, up to sigma-independent constants
/// for exactly-zero singular values. `singular_values` holds the H <= L leading values.
double evb_free_energy(double noise_variance, std::span<const double> singular_values,
                       const EvbGeometry& geometry, double residual);

/// Posterior-mean singular value of a retained component (0 < result < gamma).
double shrink_singular_value(double gamma, const EvbGeometry& geometry, double noise_variance);

struct NoiseVarianceEstimate {
  double variance = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  bool degenerate_bounds = false;  // lower >= upper; variance is the upper bound
  std::uintmax_t iterations = 0;
};

/// Minimizes evb_free_energy over its bracket. Requires L <= M and a positive leading value.
NoiseVarianceEstimate estimate_noise_variance(std::span<const double> singular_values,
                                              std::size_t L, std::size_t M, double residual);

struct FactorizationResult {
  std::size_t rank = 0;
  std::vector<double> shrunk_singular_values;  // descending, length == rank
  std::vector<double> raw_singular_values;     // descending, length == min(rows, cols)
  double noise_variance = 0.0;
  double threshold = 0.0;
  std::size_t rows = 0;  // after orientation normalization: rows <= cols
  std::size_t cols = 0;
  bool noise_estimated = false;
  bool degenerate_bounds = false;
};

/// Values-only SVD, descending.
std::vector<double> singular_values(const Eigen::Ref<const Eigen::MatrixXd>& matrix);

/// Empirical VBMF of a fully observed matrix. When `noise_variance` is empty it is estimated.
FactorizationResult evbmf(const Eigen::Ref<const Eigen::MatrixXd>& matrix,
                          std::optional<double> noise_variance = std::nullopt);

FactorizationResult evbmf(const UnfoldedMatrix& matrix,
                          std::optional<double> noise_variance = std::nullopt);

}  // namespace autohyper
