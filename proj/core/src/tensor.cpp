#include "autohyper/tensor.hpp"

#include <cmath>
#include <utility>

#include "autohyper/error.hpp"

namespace autohyper {

namespace {

void check_mode(int mode) {
  if (mode != 3 && mode != 4) {
    throw DomainError("unfolding mode must be 3 (input channels) or 4 (output channels), got " +
                      std::to_string(mode));
  }
}

// Visits every tensor element in storage order and reports (row, col) of its mode-d unfolding.
template <typename Fn>
void for_each_unfolded(const Dims4& dims, int mode, Fn&& fn) {
  const std::size_t axis = static_cast<std::size_t>(mode - 1);
  std::array<std::size_t, 4> idx{};
  std::size_t flat = 0;
  for (idx[0] = 0; idx[0] < dims[0]; ++idx[0]) {
    for (idx[1] = 0; idx[1] < dims[1]; ++idx[1]) {
      for (idx[2] = 0; idx[2] < dims[2]; ++idx[2]) {
        for (idx[3] = 0; idx[3] < dims[3]; ++idx[3], ++flat) {
          std::size_t col = 0;
          for (std::size_t d = 0; d < 4; ++d) {
            if (d != axis) col = col * dims[d] + idx[d];
          }
          fn(flat, idx[axis], col);
        }
      }
    }
  }
}

}  // namespace

std::string to_string(const Dims4& dims) {
  return std::to_string(dims[0]) + "x" + std::to_string(dims[1]) + "x" + std::to_string(dims[2]) +
         "x" + std::to_string(dims[3]);
}

WeightTensor4D::WeightTensor4D(std::string layer_name, Dims4 dims, std::vector<double> data)
    : name_(std::move(layer_name)), dims_(dims), data_(std::move(data)) {
  for (std::size_t d : dims_.n) {
    if (d == 0) throw ValidationError("tensor '" + name_ + "' has a zero dimension");
  }
  if (data_.size() != dims_.size()) {
    throw ValidationError("tensor '" + name_ + "' of dims " + to_string(dims_) + " expects " +
                          std::to_string(dims_.size()) + " values, got " +
                          std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("tensor '" + name_ + "' has a non-finite value at index " +
                            std::to_string(i));
    }
  }
}

double WeightTensor4D::frobenius_norm() const {
  double sum = 0.0;
  for (double v : data_) sum += v * v;
  return std::sqrt(sum);
}

UnfoldedMatrix unfold(const WeightTensor4D& tensor, int mode) {
  check_mode(mode);
  const Dims4& dims = tensor.dims();
  const std::size_t rows = dims[static_cast<std::size_t>(mode - 1)];
  UnfoldedMatrix out;
  out.mode = mode;
  out.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims.size() / rows));
  const auto data = tensor.data();
  for_each_unfolded(dims, mode, [&](std::size_t flat, std::size_t row, std::size_t col) {
    out.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = data[flat];
  });
  return out;
}

WeightTensor4D refold(const UnfoldedMatrix& matrix, const Dims4& dims, std::string layer_name) {
  check_mode(matrix.mode);
  const std::size_t rows = dims[static_cast<std::size_t>(matrix.mode - 1)];
  if (dims.size() == 0 || matrix.rows() != rows || matrix.rows() * matrix.cols() != dims.size()) {
    throw ValidationError("cannot refold a " + std::to_string(matrix.rows()) + "x" +
                          std::to_string(matrix.cols()) + " mode-" + std::to_string(matrix.mode) +
                          " matrix into dims " + to_string(dims));
  }
  std::vector<double> data(dims.size());
  for_each_unfolded(dims, matrix.mode, [&](std::size_t flat, std::size_t row, std::size_t col) {
    data[flat] = matrix.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  });
  return WeightTensor4D(std::move(layer_name), dims, std::move(data));
}

}  // namespace autohyper
