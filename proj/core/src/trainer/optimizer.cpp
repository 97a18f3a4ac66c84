#include "autohyper/trainer/optimizer.hpp"

#include <cmath>

#include "autohyper/error.hpp"

namespace autohyper::trainer {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd_momentum: return "sgd_momentum";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adagrad: return "adagrad";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(const std::string& text) {
  if (text == "sgd_momentum" || text == "sgd") return OptimizerKind::sgd_momentum;
  if (text == "adam") return OptimizerKind::adam;
  if (text == "adagrad") return OptimizerKind::adagrad;
  throw ConfigError("unknown optimizer '" + text + "' (expected sgd_momentum, adam or adagrad)");
}

template <typename Real>
Optimizer<Real>::Optimizer(const OptimizerConfig& config, std::size_t n) : config_(config) {
  if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) {
    throw ValidationError("learning rate must be finite and non-negative");
  }
  if (!(config.weight_decay >= 0.0) || !std::isfinite(config.weight_decay)) {
    throw ValidationError("weight decay must be finite and non-negative");
  }
  if (config.kind != OptimizerKind::adagrad) first_.assign(n, Real(0));
  if (config.kind != OptimizerKind::sgd_momentum) second_.assign(n, Real(0));
}

template <typename Real>
void Optimizer<Real>::step(std::span<Real> params, std::span<const Real> grad) {
  if (params.size() != grad.size()) throw ValidationError("gradient/parameter size mismatch");
  ++steps_;
  const Real lr = static_cast<Real>(config_.lr);
  const Real wd = static_cast<Real>(config_.weight_decay);
  const std::size_t n = params.size();

  switch (config_.kind) {
    case OptimizerKind::sgd_momentum: {
      const Real mu = static_cast<Real>(config_.momentum);
      for (std::size_t i = 0; i < n; ++i) {
        const Real g = grad[i] + wd * params[i];
        first_[i] = steps_ == 1 ? g : mu * first_[i] + g;
        params[i] -= lr * first_[i];
      }
      break;
    }
    case OptimizerKind::adam: {
      const Real b1 = static_cast<Real>(config_.beta1), b2 = static_cast<Real>(config_.beta2);
      const auto t = static_cast<double>(steps_);
      const Real c1 = static_cast<Real>(1.0 - std::pow(config_.beta1, t));
      const Real c2 = static_cast<Real>(1.0 - std::pow(config_.beta2, t));
      const Real eps = static_cast<Real>(config_.adam_eps);
      for (std::size_t i = 0; i < n; ++i) {
        const Real g = grad[i] + wd * params[i];
        first_[i] = b1 * first_[i] + (Real(1) - b1) * g;
        second_[i] = b2 * second_[i] + (Real(1) - b2) * g * g;
        const Real m_hat = first_[i] / c1;
        const Real v_hat = second_[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
      break;
    }
    case OptimizerKind::adagrad: {
      const Real eps = static_cast<Real>(config_.adagrad_eps);
      for (std::size_t i = 0; i < n; ++i) {
        const Real g = grad[i] + wd * params[i];
        second_[i] += g * g;
        params[i] -= lr * g / (std::sqrt(second_[i]) + eps);
      }
      break;
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace autohyper::trainer
