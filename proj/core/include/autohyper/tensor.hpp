#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace autohyper {

// (kernel height, kernel width, input channels, output channels)
struct Dims4 {
  std::array<std::size_t, 4> n{1, 1, 1, 1};

  std::size_t operator[](std::size_t i) const { return n[i]; }
  std::size_t size() const { return n[0] * n[1] * n[2] * n[3]; }
  bool operator==(const Dims4&) const = default;
};

std::string to_string(const Dims4& dims);

/// Convolutional weight tensor stored densely in row-major order over (N1, N2, N3, N4).
///
/// The constructor validates shape and finiteness, so every live instance satisfies the
/// tensor invariants.
class WeightTensor4D {
 public:
  WeightTensor4D(std::string layer_name, Dims4 dims, std::vector<double> data);

  const std::string& layer_name() const { return name_; }
  const Dims4& dims() const { return dims_; }
  std::span<const double> data() const { return data_; }

  double at(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t i4) const {
    return data_[((i1 * dims_[1] + i2) * dims_[2] + i3) * dims_[3] + i4];
  }

  double frobenius_norm() const;

  bool operator==(const WeightTensor4D&) const = default;

 private:
  std::string name_;
  Dims4 dims_;
  std::vector<double> data_;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Mode-d matricization of a WeightTensor4D. Row i collects every element whose index along
// `mode` equals i; columns run over the remaining dims in ascending order (N1 outermost).
struct UnfoldedMatrix {
  int mode = 3;
  RowMajorMatrix values;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

/// Throws DomainError unless mode is 3 or 4.
UnfoldedMatrix unfold(const WeightTensor4D& tensor, int mode);

/// Inverse of unfold. Throws ValidationError when the matrix shape does not match `dims`.
WeightTensor4D refold(const UnfoldedMatrix& matrix, const Dims4& dims, std::string layer_name = {});

}  // namespace autohyper
