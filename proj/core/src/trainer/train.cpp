#include "autohyper/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "autohyper/error.hpp"
#include "autohyper/rng.hpp"

namespace autohyper::trainer {

std::vector<std::size_t> batch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x42415443, epoch));  // "BATC"
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

namespace {

void gather(const Dataset& data, std::span<const std::size_t> idx, std::vector<float>& images,
            std::vector<int>& labels) {
  images.resize(idx.size() * data.pixels());
  labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto img = data.image(idx[i]);
    std::copy(img.begin(), img.end(), images.begin() + static_cast<std::ptrdiff_t>(i * data.pixels()));
    labels[i] = data.labels[idx[i]];
  }
}

}  // namespace

TrainResult train_epochs(const Dataset& data, const TrainConfig& config) {
  if (config.epochs == 0) throw ValidationError("training needs at least one epoch");
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");
  if (data.size() == 0) throw ValidationError("training set is empty");

  TrainResult result;
  MiniConvNet<float> net(data.classes, config.net_seed);
  Optimizer<float> optimizer(config.optimizer, net.parameter_count());
  result.initial = net.snapshot();

  std::vector<float> gradient, images;
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < config.epochs && !result.divergent; ++epoch) {
    const auto order = batch_order(data.size(), config.net_seed, epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0, batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      gather(data, std::span(order).subspan(start, count), images, labels);
      const auto batch = net.forward_backward(images, labels, data.height, data.width, &gradient);
      if (!std::isfinite(batch.loss) || batch.loss > kDivergenceLoss) {
        result.divergent = true;
        result.divergence_reason = "loss " + std::to_string(batch.loss) + " at epoch " +
                                   std::to_string(epoch + 1);
        break;
      }
      optimizer.step(net.parameters(), gradient);
      const auto params = net.parameters();
      if (!std::all_of(params.begin(), params.end(), [](float v) { return std::isfinite(v); })) {
        result.divergent = true;
        result.divergence_reason = "non-finite parameter at epoch " + std::to_string(epoch + 1);
        break;
      }
      loss_sum += batch.loss;
      correct += batch.correct;
      ++batches;
    }
    if (result.divergent) break;
    result.train_loss.push_back(loss_sum / static_cast<double>(batches));
    result.train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(data.size()));
    result.snapshots.push_back(net.snapshot());
  }
  result.net = std::move(net);
  return result;
}

double accuracy(MiniConvNet<float>& net, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw ValidationError("accuracy of an empty dataset");
  std::size_t correct = 0;
  std::vector<float> images;
  std::vector<int> labels;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - start);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), start);
    gather(data, idx, images, labels);
    const auto pred = net.predict(images, count, data.height, data.width);
    for (std::size_t i = 0; i < count; ++i) correct += pred[i] == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

GradientCheckResult gradient_check(std::uint64_t net_seed, const Dataset& batch, GradientScope scope,
                                   std::size_t coordinates, double h, std::uint64_t coordinate_seed) {
  if (batch.size() == 0) throw ValidationError("gradient check needs a non-empty batch");
  MiniConvNet<double> net(batch.classes, net_seed);
  std::vector<double> analytic;
  ActivationPattern base;
  net.forward_backward(batch.images, batch.labels, batch.height, batch.width, &analytic, &base);

  std::size_t first = 0, last = net.parameter_count();
  if (scope == GradientScope::head_only) {
    first = net.head_weight().offset;
    last = net.head_bias().offset + net.head_bias().size;
  }
  std::vector<std::size_t> candidates(last - first);
  std::iota(candidates.begin(), candidates.end(), first);
  Rng rng(derive_seed(coordinate_seed, net_seed, 0x47524144));  // "GRAD"
  for (std::size_t i = candidates.size(); i > 1; --i) std::swap(candidates[i - 1], candidates[rng.below(i)]);

  GradientCheckResult result;
  ActivationPattern probe;
  auto params = net.parameters();
  for (std::size_t idx : candidates) {
    if (result.coordinates == coordinates) break;
    const double saved = params[idx];
    params[idx] = saved + h;
    const double up = net.forward_backward(batch.images, batch.labels, batch.height, batch.width,
                                           nullptr, &probe).loss;
    const bool up_smooth = probe == base;
    params[idx] = saved - h;
    const double down = net.forward_backward(batch.images, batch.labels, batch.height, batch.width,
                                             nullptr, &probe).loss;
    const bool down_smooth = probe == base;
    params[idx] = saved;
    if (!up_smooth || !down_smooth) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic[idx] - numeric) / denom);
    ++result.coordinates;
  }
  return result;
}

}  // namespace autohyper::trainer
