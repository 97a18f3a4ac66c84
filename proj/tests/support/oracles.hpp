#pragma once

// Independent reference computations used by the tests. Nothing here calls the library code
// under test for the quantity being checked.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "autohyper/rng.hpp"

namespace oracle {

using Real50 = boost::multiprecision::cpp_bin_float_50;

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double sd, std::uint64_t seed) {
  autohyper::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * rng.normal();
  return m;
}

// Random orthonormal columns via Householder QR of a Gaussian matrix.
inline Eigen::MatrixXd orthonormal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  const Eigen::MatrixXd g = gaussian(rows, cols, 1.0, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

// U diag(s) V^T plus i.i.d. N(0, noise_sd^2).
inline Eigen::MatrixXd planted(Eigen::Index rows, Eigen::Index cols, std::span<const double> s,
                               double noise_sd, std::uint64_t seed) {
  const auto k = static_cast<Eigen::Index>(s.size());
  const Eigen::MatrixXd u = orthonormal(rows, k, seed * 3 + 1);
  const Eigen::MatrixXd v = orthonormal(cols, k, seed * 3 + 2);
  Eigen::VectorXd d(k);
  for (Eigen::Index i = 0; i < k; ++i) d(i) = s[static_cast<std::size_t>(i)];
  return u * d.asDiagonal() * v.transpose() + gaussian(rows, cols, noise_sd, seed * 3 + 3);
}

// One-sided Jacobi SVD: a different algorithm from the divide-and-conquer SVD in the library.
inline std::vector<double> singular_values_jacobi(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

// Textbook EVBMF free energy evaluated in long double directly from the closed form (keeps
// the -log(gamma^2) constant; the caller compares argmins, not values).
inline long double free_energy(long double s2, std::span<const double> gamma, std::size_t L,
                               std::size_t M, long double residual) {
  const long double alpha = static_cast<long double>(L) / static_cast<long double>(M);
  const long double tau_bar = 2.5129L * std::sqrt(alpha);
  const long double x_bar = (1 + tau_bar) * (1 + alpha / tau_bar);
  long double f = 0;
  for (double g : gamma) {
    const long double x = static_cast<long double>(g) * g / (static_cast<long double>(M) * s2);
    if (x <= x_bar) {
      f += x - std::log(x);
    } else {
      const long double b = x - (1 + alpha);
      const long double tau = 0.5L * (b + std::sqrt(b * b - 4 * alpha));
      f += x - tau + std::log((tau + 1) / x) + alpha * std::log(tau / alpha + 1);
    }
  }
  f += residual / (static_cast<long double>(M) * s2);
  f += static_cast<long double>(L - gamma.size()) * std::log(s2);
  return f;
}

// Bracket of the free-energy search, computed from its definition.
inline std::pair<double, double> bracket(std::span<const double> g, std::size_t L, std::size_t M) {
  const double alpha = static_cast<double>(L) / static_cast<double>(M);
  const double tau_bar = 2.5129 * std::sqrt(alpha);
  const double x_bar = (1 + tau_bar) * (1 + alpha / tau_bar);
  double sum = 0;
  for (double v : g) sum += v * v;
  const double hi = sum / static_cast<double>(L * M);
  const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(L) / (1 + alpha)) - 1);
  double tail = 0;
  for (std::size_t i = k; i < g.size(); ++i) tail += g[i] * g[i];
  tail /= static_cast<double>(g.size() - k);
  const double lo = std::max(g[k] * g[k] / (static_cast<double>(M) * x_bar), tail / static_cast<double>(M));
  return {lo, hi};
}

// Dense log-spaced grid search of the free energy over [lo, hi].
inline double grid_argmin(std::span<const double> gamma, std::size_t L, std::size_t M,
                          double residual, double lo, double hi, std::size_t points = 10000) {
  double best = lo;
  long double best_f = INFINITY;
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    const double s2 = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    const long double f = free_energy(s2, gamma, L, M, residual);
    if (f < best_f) {
      best_f = f;
      best = s2;
    }
  }
  return best;
}

// Shrinkage formula in 50-digit arithmetic.
inline double shrink(double gamma, std::size_t L, std::size_t M, double s2) {
  const Real50 g = gamma, sigma2 = s2, l = L, m = M;
  const Real50 a = 1 - (l + m) * sigma2 / (g * g);
  const Real50 d = g / 2 * (a + boost::multiprecision::sqrt(a * a - 4 * l * m * sigma2 * sigma2 / (g * g * g * g)));
  return static_cast<double>(d);
}

// c_j = (prod_{i<=j} v_i)^0.8 by direct multiplication in 50-digit arithmetic.
inline std::vector<double> stabilize(std::span<const double> v) {
  std::vector<double> out;
  Real50 prod = 1;
  for (double x : v) {
    prod *= Real50(x);
    out.push_back(prod == 0 ? 0.0 : static_cast<double>(boost::multiprecision::pow(prod, Real50(0.8))));
  }
  return out;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sigmoid response surface in log10 of a hyper-parameter, falling from 1 to 0 around `center`.
inline double sigmoid_surface(double value, double center, double steepness = 4.0) {
  return 1.0 / (1.0 + std::exp(steepness * (std::log10(value) - center)));
}

// Plateau of a swept 1-D surface. The change attributed to index i is the step leaving it,
// |z[i+1] - z[i]|, so a surface that is steep up to k0 and flat afterwards has its inception
// at k0 itself. Inception is the first index past the steepest step whose change is below eps;
// the region runs on while the following steps stay below eps.
struct Plateau {
  std::size_t inception = 0;
  std::size_t end = 0;  // inclusive
};

inline Plateau plateau_region(std::span<const double> z, double eps) {
  std::size_t steepest = 0;
  double steepest_change = -1.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double change = std::abs(z[i + 1] - z[i]);
    if (change > steepest_change) {
      steepest_change = change;
      steepest = i;
    }
  }
  Plateau p{z.size() - 1, z.size() - 1};
  for (std::size_t i = steepest + 1; i + 1 < z.size(); ++i) {
    if (std::abs(z[i + 1] - z[i]) < eps) {
      p.inception = p.end = i;
      while (p.end + 1 < z.size() && std::abs(z[p.end + 1] - z[p.end]) < eps) ++p.end;
      break;
    }
  }
  return p;
}

}  // namespace oracle
