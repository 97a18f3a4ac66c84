#include "autohyper/evbmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/SVD>
#include <boost/math/tools/minima.hpp>

#include "autohyper/error.hpp"

namespace autohyper {

namespace {

constexpr double kTauBarCoefficient = 2.5129;
constexpr int kMinimizerBits = 31;  // relative tolerance 2^-30 < 1e-9
constexpr std::uintmax_t kMinimizerMaxIterations = 200;
constexpr double kZeroLowerBoundFloor = 1e-12;

double tau(double x, double alpha) {
  const double b = x - (1.0 + alpha);
  return 0.5 * (b + std::sqrt(std::max(0.0, b * b - 4.0 * alpha)));
}

}  // namespace

EvbGeometry EvbGeometry::make(std::size_t L, std::size_t M) {
  if (L == 0 || M == 0 || L > M) {
    throw ValidationError("EVB geometry requires 1 <= L <= M, got L=" + std::to_string(L) +
                          " M=" + std::to_string(M));
  }
  EvbGeometry g;
  g.L = L;
  g.M = M;
  g.alpha = static_cast<double>(L) / static_cast<double>(M);
  g.tau_bar = kTauBarCoefficient * std::sqrt(g.alpha);
  g.x_bar = (1.0 + g.tau_bar) * (1.0 + g.alpha / g.tau_bar);
  return g;
}

double EvbGeometry::threshold(double noise_variance) const {
  return std::sqrt(static_cast<double>(M) * noise_variance * x_bar);
}

double evb_free_energy(double noise_variance, std::span<const double> singular_values,
                       const EvbGeometry& g, double residual) {
  const double M = static_cast<double>(g.M);
  const double scale = M * noise_variance;
  double energy = 0.0;
  for (double gamma : singular_values) {
    const double x = gamma * gamma / scale;
    if (x <= g.x_bar) {
      // x - log x, with the constant -log(gamma^2) dropped when gamma == 0.
      energy += x > 0.0 ? x - std::log(x) : std::log(scale);
    } else {
      const double t = tau(x, g.alpha);
      energy += x - t + std::log((t + 1.0) / x) + g.alpha * std::log(t / g.alpha + 1.0);
    }
  }
  const double unused = static_cast<double>(g.L) - static_cast<double>(singular_values.size());
  return energy + residual / scale + unused * std::log(noise_variance);
}

double shrink_singular_value(double gamma, const EvbGeometry& g, double noise_variance) {
  const double L = static_cast<double>(g.L);
  const double M = static_cast<double>(g.M);
  const double g2 = gamma * gamma;
  const double a = 1.0 - (L + M) * noise_variance / g2;
  const double disc = a * a - 4.0 * L * M * noise_variance * noise_variance / (g2 * g2);
  return 0.5 * gamma * (a + std::sqrt(std::max(0.0, disc)));
}

NoiseVarianceEstimate estimate_noise_variance(std::span<const double> sv, std::size_t L,
                                              std::size_t M, double residual) {
  const EvbGeometry g = EvbGeometry::make(L, M);
  if (sv.empty() || sv.size() > L || !(sv.front() > 0.0)) {
    throw ValidationError("noise estimation needs 1..L singular values with a positive leader");
  }
  if (!(residual >= 0.0) || !std::isfinite(residual)) {
    throw ValidationError("residual must be finite and non-negative");
  }
  const std::size_t H = sv.size();
  double total = residual;
  for (double s : sv) total += s * s;

  NoiseVarianceEstimate est;
  est.upper_bound = total / (static_cast<double>(L) * static_cast<double>(M));

  const double ceil_term = std::ceil(static_cast<double>(L) / (1.0 + g.alpha));
  const std::size_t k = std::min(H - 1, static_cast<std::size_t>(std::max(0.0, ceil_term - 1.0)));
  double tail = 0.0;
  for (std::size_t i = k; i < H; ++i) tail += sv[i] * sv[i];
  tail /= static_cast<double>(H - k);
  est.lower_bound = std::max(sv[k] * sv[k] / (static_cast<double>(M) * g.x_bar),
                             tail / static_cast<double>(M));
  if (est.lower_bound <= 0.0) est.lower_bound = est.upper_bound * kZeroLowerBoundFloor;

  if (est.lower_bound >= est.upper_bound) {
    est.variance = est.upper_bound;
    est.degenerate_bounds = true;
    return est;
  }

  // Rescale so the bracket starts at 1.
  const double scale = 1.0 / est.lower_bound;
  std::vector<double> scaled(sv.begin(), sv.end());
  for (double& s : scaled) s *= std::sqrt(scale);
  const double scaled_residual = residual * scale;
  const double hi = est.upper_bound * scale;

  auto objective = [&](double s2) { return evb_free_energy(s2, scaled, g, scaled_residual); };
  std::uintmax_t iterations = kMinimizerMaxIterations;
  const auto [arg, value] =
      boost::math::tools::brent_find_minima(objective, 1.0, hi, kMinimizerBits, iterations);
  if (!std::isfinite(arg) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "EVB noise-variance minimization failed: bracket [" << est.lower_bound << ", "
        << est.upper_bound << "], L=" << L << " M=" << M << " H=" << H
        << ", objective at endpoints " << objective(1.0) << " / " << objective(hi);
    throw NumericalError(msg.str());
  }
  est.variance = arg / scale;
  est.iterations = iterations;
  return est;
}

std::vector<double> singular_values(const Eigen::Ref<const Eigen::MatrixXd>& matrix) {
  if (matrix.rows() == 0 || matrix.cols() == 0) return {};
  Eigen::BDCSVD<Eigen::MatrixXd> svd(matrix);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

FactorizationResult evbmf(const Eigen::Ref<const Eigen::MatrixXd>& matrix,
                          std::optional<double> noise_variance) {
  if (matrix.rows() == 0 || matrix.cols() == 0) {
    throw ValidationError("EVBMF needs a matrix with at least one row and column");
  }
  if (!matrix.allFinite()) throw ValidationError("EVBMF input contains non-finite values");
  if (noise_variance && !(*noise_variance > 0.0 && std::isfinite(*noise_variance))) {
    throw ValidationError("supplied noise variance must be positive and finite");
  }

  FactorizationResult result;
  if (matrix.rows() <= matrix.cols()) {
    result.raw_singular_values = singular_values(matrix);
    result.rows = static_cast<std::size_t>(matrix.rows());
    result.cols = static_cast<std::size_t>(matrix.cols());
  } else {
    const Eigen::MatrixXd transposed = matrix.transpose();
    result.raw_singular_values = singular_values(transposed);
    result.rows = static_cast<std::size_t>(matrix.cols());
    result.cols = static_cast<std::size_t>(matrix.rows());
  }
  const EvbGeometry g = EvbGeometry::make(result.rows, result.cols);
  const auto& sv = result.raw_singular_values;

  if (noise_variance) {
    result.noise_variance = *noise_variance;
  } else if (sv.front() > 0.0) {
    const NoiseVarianceEstimate est = estimate_noise_variance(sv, g.L, g.M, 0.0);
    result.noise_variance = est.variance;
    result.noise_estimated = true;
    result.degenerate_bounds = est.degenerate_bounds;
  } else {
    result.noise_variance = kMinNoiseVariance;
    result.noise_estimated = true;
    return result;
  }

  result.threshold = g.threshold(result.noise_variance);
  for (double gamma : sv) {
    if (!(gamma > result.threshold)) break;
    result.shrunk_singular_values.push_back(shrink_singular_value(gamma, g, result.noise_variance));
  }
  result.rank = result.shrunk_singular_values.size();
  return result;
}

FactorizationResult evbmf(const UnfoldedMatrix& matrix, std::optional<double> noise_variance) {
  return evbmf(Eigen::MatrixXd(matrix.values), noise_variance);
}

}  // namespace autohyper
