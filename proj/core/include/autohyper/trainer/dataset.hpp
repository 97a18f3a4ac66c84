#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace autohyper::trainer {

enum class DatasetSource { synthetic_shapes, idx_files };

std::string to_string(DatasetSource source);
DatasetSource parse_dataset_source(const std::string& text);

struct DatasetSpec {
  DatasetSource source = DatasetSource::synthetic_shapes;
  std::size_t train_size = 2048;
  std::size_t heldout_size = 512;
  std::size_t image_size = 16;
  double pixel_noise = 0.2;
  std::uint64_t seed = 1234;
  std::filesystem::path idx_images;
  std::filesystem::path idx_labels;
  std::filesystem::path idx_heldout_images;  // optional
  std::filesystem::path idx_heldout_labels;
};

/// Single-channel images stored (N, H, W) row-major in [0, 1] (plus noise for synthetic data).
struct Dataset {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<float> images;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t pixels() const { return height * width; }
  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(images).subspan(i * pixels(), pixels());
  }

  Dataset subset(std::span<const std::size_t> indices) const;
};

enum class ShapeClass : int { horizontal_stripes = 0, vertical_stripes = 1, checkerboard = 2, blob = 3 };
inline constexpr std::size_t kSyntheticClasses = 4;

/// Label of sample i is i mod 4, so classes are balanced to within one sample.
Dataset make_synthetic_shapes(std::size_t count, std::size_t image_size, double pixel_noise,
                              std::uint64_t seed);

Dataset make_training_set(const DatasetSpec& spec);
/// Synthetic data drawn from a separate seed stream, or the optional IDX held-out pair.
/// Empty when no held-out source is configured.
Dataset make_heldout_set(const DatasetSpec& spec);

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// IDX (MNIST-style) unsigned-byte images and labels; pixels scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

}  // namespace autohyper::trainer
