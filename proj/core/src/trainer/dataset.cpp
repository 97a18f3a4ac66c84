#include "autohyper/trainer/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "autohyper/error.hpp"
#include "autohyper/rng.hpp"

namespace autohyper::trainer {

std::string to_string(DatasetSource source) {
  return source == DatasetSource::synthetic_shapes ? "synthetic_shapes" : "idx_files";
}

DatasetSource parse_dataset_source(const std::string& text) {
  if (text == "synthetic_shapes") return DatasetSource::synthetic_shapes;
  if (text == "idx_files" || text == "idx") return DatasetSource::idx_files;
  throw ConfigError("unknown dataset source '" + text + "'");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.height = height;
  out.width = width;
  out.classes = classes;
  for (std::size_t i : indices) {
    const auto img = image(i);
    out.images.insert(out.images.end(), img.begin(), img.end());
    out.labels.push_back(labels.at(i));
  }
  return out;
}

namespace {

void draw_shape(ShapeClass shape, std::size_t n, Rng& rng, float* px) {
  const double center = 0.5 * static_cast<double>(n - 1);
  switch (shape) {
    case ShapeClass::horizontal_stripes:
    case ShapeClass::vertical_stripes: {
      const std::size_t period = 4 + 2 * rng.below(3);  // 4, 6 or 8
      const std::size_t phase = rng.below(period);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          const std::size_t t = shape == ShapeClass::horizontal_stripes ? y : x;
          px[y * n + x] = ((t + phase) % period) < period / 2 ? 1.0f : 0.0f;
        }
      }
      break;
    }
    case ShapeClass::checkerboard: {
      const std::size_t cell = 2 + rng.below(3);  // 2, 3 or 4
      const std::size_t oy = rng.below(cell), ox = rng.below(cell);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          px[y * n + x] = (((y + oy) / cell + (x + ox) / cell) % 2) ? 1.0f : 0.0f;
        }
      }
      break;
    }
    case ShapeClass::blob: {
      const double cy = center + rng.uniform(-1.5, 1.5);
      const double cx = center + rng.uniform(-1.5, 1.5);
      const double s = rng.uniform(2.0, 4.0) * static_cast<double>(n) / 16.0;
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
          px[y * n + x] = static_cast<float>(std::exp(-(dy * dy + dx * dx) / (2.0 * s * s)));
        }
      }
      break;
    }
  }
}

}  // namespace

Dataset make_synthetic_shapes(std::size_t count, std::size_t image_size, double pixel_noise,
                              std::uint64_t seed) {
  if (image_size < 4) throw ValidationError("synthetic images must be at least 4x4");
  Dataset d;
  d.height = d.width = image_size;
  d.classes = kSyntheticClasses;
  d.images.resize(count * image_size * image_size);
  d.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, 0x5348, i));  // "SH"
    const auto shape = static_cast<ShapeClass>(i % kSyntheticClasses);
    d.labels[i] = static_cast<int>(shape);
    float* px = d.images.data() + i * d.pixels();
    draw_shape(shape, image_size, rng, px);
    for (std::size_t p = 0; p < d.pixels(); ++p) {
      px[p] += static_cast<float>(pixel_noise * rng.normal());
    }
  }
  return d;
}

Dataset make_training_set(const DatasetSpec& spec) {
  if (spec.source == DatasetSource::idx_files) {
    Dataset d = load_idx(spec.idx_images, spec.idx_labels);
    if (spec.train_size > 0 && spec.train_size < d.size()) {
      std::vector<std::size_t> first(spec.train_size);
      for (std::size_t i = 0; i < first.size(); ++i) first[i] = i;
      d = d.subset(first);
    }
    return d;
  }
  return make_synthetic_shapes(spec.train_size, spec.image_size, spec.pixel_noise, spec.seed);
}

Dataset make_heldout_set(const DatasetSpec& spec) {
  if (spec.source == DatasetSource::idx_files) {
    if (spec.idx_heldout_images.empty()) return {};
    return load_idx(spec.idx_heldout_images, spec.idx_heldout_labels);
  }
  return make_synthetic_shapes(spec.heldout_size, spec.image_size, spec.pixel_noise,
                               derive_seed(spec.seed, 0x484f4c44));  // "HOLD"
}

}  // namespace autohyper::trainer
