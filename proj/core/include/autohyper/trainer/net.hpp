#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "autohyper/snapshot.hpp"

namespace autohyper::trainer {

struct ConvSpec {
  std::size_t in;
  std::size_t out;
};

// 3x3 same-padded convolutions 1->8->16->16 with ReLU, 2x2 max-pool after the second,
// global average pool and a linear head.
inline constexpr std::array<ConvSpec, 3> kConvPlan{{{1, 8}, {8, 16}, {16, 16}}};
inline constexpr std::size_t kKernel = 3;
inline constexpr std::size_t kPoolAfter = 1;  // 0-based conv index followed by the max-pool

// ReLU on/off masks and max-pool winners of one forward pass; equal patterns mean the loss is
// smooth along the segment between two parameter vectors that produce them.
struct ActivationPattern {
  std::vector<std::uint8_t> relu;
  std::vector<std::uint32_t> pool;

  bool operator==(const ActivationPattern&) const = default;
};

template <typename Real>
class MiniConvNet {
 public:
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  struct Range {
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  /// Kaiming-uniform conv weights (fan-in N1*N2*N3), zero biases.
  MiniConvNet(std::size_t classes, std::uint64_t seed);

  std::size_t classes() const { return classes_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<Real> parameters() { return params_; }
  std::span<const Real> parameters() const { return params_; }

  Range conv_weight(std::size_t layer) const { return conv_w_[layer]; }
  Range conv_bias(std::size_t layer) const { return conv_b_[layer]; }
  Range head_weight() const { return head_w_; }
  Range head_bias() const { return head_b_; }

  struct BatchResult {
    double loss = 0.0;  // mean softmax cross-entropy
    std::size_t correct = 0;
  };

  /// Forward pass over `batch` images of height x width; fills `gradient` (same layout as
  /// parameters()) when non-null and `pattern` when non-null.
  BatchResult forward_backward(std::span<const float> images, std::span<const int> labels,
                               std::size_t height, std::size_t width, std::vector<Real>* gradient,
                               ActivationPattern* pattern = nullptr);

  std::vector<int> predict(std::span<const float> images, std::size_t count, std::size_t height,
                           std::size_t width);

  /// Conv weights as float32 snapshot layers named conv1..conv3, dims (3, 3, in, out).
  Snapshot snapshot() const;

 private:
  struct Workspace {
    std::array<Matrix, 3> col;   // im2col inputs per conv
    std::array<Matrix, 3> pre;   // pre-activations
    std::array<Matrix, 3> act;   // post-ReLU
    Matrix pooled;
    std::vector<std::uint32_t> pool_index;
    Matrix gap;
    Matrix logits;
    Matrix d_logits, d_gap, d_act, d_pooled, d_col;
  };

  void forward(std::span<const float> images, std::size_t batch, std::size_t height,
               std::size_t width);

  std::size_t classes_;
  std::vector<Real> params_;
  std::array<Range, 3> conv_w_{}, conv_b_{};
  Range head_w_, head_b_;
  Workspace ws_;
  std::size_t batch_ = 0;
  std::array<std::size_t, 3> height_{}, width_{};
};

extern template class MiniConvNet<float>;
extern template class MiniConvNet<double>;

}  // namespace autohyper::trainer
