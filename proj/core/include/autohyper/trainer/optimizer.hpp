#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace autohyper::trainer {

enum class OptimizerKind { sgd_momentum, adam, adagrad };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double weight_decay = 0.0;  // coupled L2: added to the gradient before the update
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double adagrad_eps = 1e-10;
};

template <typename Real>
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, std::size_t parameter_count);

  /// Applies one update in place. `gradient` is left untouched.
  void step(std::span<Real> parameters, std::span<const Real> gradient);

  const OptimizerConfig& config() const { return config_; }
  std::size_t steps() const { return steps_; }
  // momentum buffer / Adam first moment / unused
  const std::vector<Real>& first() const { return first_; }
  // Adam second moment / AdaGrad squared-gradient sum / unused
  const std::vector<Real>& second() const { return second_; }

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<Real> first_;
  std::vector<Real> second_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace autohyper::trainer
