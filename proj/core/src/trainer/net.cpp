#include "autohyper/trainer/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "autohyper/error.hpp"
#include "autohyper/rng.hpp"

namespace autohyper::trainer {

namespace {

// col[(b, y, x), (ky, kx, c)] = in[b, y + ky - 1, x + kx - 1, c]; column order matches the
// row-major (kh, kw, in) layout of the weight tensor.
template <typename Real>
void im2col(const Real* in, std::size_t batch, std::size_t h, std::size_t w, std::size_t c, Real* col) {
  const std::size_t k = kKernel * kKernel * c;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        Real* row = col + ((b * h + y) * w + x) * k;
        for (std::size_t ky = 0; ky < kKernel; ++ky) {
          const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          for (std::size_t kx = 0; kx < kKernel; ++kx) {
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            Real* dst = row + (ky * kKernel + kx) * c;
            if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(h) ||
                xx >= static_cast<std::ptrdiff_t>(w)) {
              std::fill(dst, dst + c, Real(0));
            } else {
              const Real* src = in + ((b * h + static_cast<std::size_t>(yy)) * w +
                                      static_cast<std::size_t>(xx)) * c;
              std::copy(src, src + c, dst);
            }
          }
        }
      }
    }
  }
}

template <typename Real>
void col2im(const Real* col, std::size_t batch, std::size_t h, std::size_t w, std::size_t c, Real* out) {
  const std::size_t k = kKernel * kKernel * c;
  std::fill(out, out + batch * h * w * c, Real(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const Real* row = col + ((b * h + y) * w + x) * k;
        for (std::size_t ky = 0; ky < kKernel; ++ky) {
          const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < kKernel; ++kx) {
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
            const Real* src = row + (ky * kKernel + kx) * c;
            Real* dst = out + ((b * h + static_cast<std::size_t>(yy)) * w + static_cast<std::size_t>(xx)) * c;
            for (std::size_t i = 0; i < c; ++i) dst[i] += src[i];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Real>
MiniConvNet<Real>::MiniConvNet(std::size_t classes, std::uint64_t seed) : classes_(classes) {
  if (classes < 2) throw ValidationError("classifier needs at least two classes");
  std::size_t offset = 0;
  auto take = [&](std::size_t n) {
    Range r{offset, n};
    offset += n;
    return r;
  };
  for (std::size_t l = 0; l < kConvPlan.size(); ++l) {
    conv_w_[l] = take(kKernel * kKernel * kConvPlan[l].in * kConvPlan[l].out);
    conv_b_[l] = take(kConvPlan[l].out);
  }
  const std::size_t features = kConvPlan.back().out;
  head_w_ = take(features * classes);
  head_b_ = take(classes);
  params_.assign(offset, Real(0));

  Rng rng(derive_seed(seed, 0x494e4954));  // "INIT"
  for (std::size_t l = 0; l < kConvPlan.size(); ++l) {
    const double fan_in = static_cast<double>(kKernel * kKernel * kConvPlan[l].in);
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < conv_w_[l].size; ++i) {
      params_[conv_w_[l].offset + i] = static_cast<Real>(rng.uniform(-bound, bound));
    }
  }
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(features));
  for (std::size_t i = 0; i < head_w_.size; ++i) {
    params_[head_w_.offset + i] = static_cast<Real>(rng.uniform(-head_bound, head_bound));
  }
}

template <typename Real>
void MiniConvNet<Real>::forward(std::span<const float> images, std::size_t batch, std::size_t height,
                                std::size_t width) {
  if (images.size() != batch * height * width) {
    throw ValidationError("image buffer does not match batch x height x width");
  }
  batch_ = batch;
  Matrix input(static_cast<Eigen::Index>(batch * height * width), 1);
  for (std::size_t i = 0; i < images.size(); ++i) input.data()[i] = static_cast<Real>(images[i]);

  const Matrix* in = &input;
  std::size_t h = height, w = width;
  for (std::size_t l = 0; l < kConvPlan.size(); ++l) {
    const std::size_t cin = kConvPlan[l].in, cout = kConvPlan[l].out;
    const std::size_t k = kKernel * kKernel * cin;
    const auto rows = static_cast<Eigen::Index>(batch * h * w);
    height_[l] = h;
    width_[l] = w;
    ws_.col[l].resize(rows, static_cast<Eigen::Index>(k));
    im2col(in->data(), batch, h, w, cin, ws_.col[l].data());

    ConstMatrixMap weight(params_.data() + conv_w_[l].offset, static_cast<Eigen::Index>(k),
                          static_cast<Eigen::Index>(cout));
    Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> bias(params_.data() + conv_b_[l].offset,
                                                                 static_cast<Eigen::Index>(cout));
    ws_.pre[l].noalias() = ws_.col[l] * weight;
    ws_.pre[l].rowwise() += bias;
    ws_.act[l] = ws_.pre[l].cwiseMax(Real(0));
    in = &ws_.act[l];

    if (l == kPoolAfter) {
      const std::size_t ph = h / 2, pw = w / 2;
      ws_.pooled.resize(static_cast<Eigen::Index>(batch * ph * pw), static_cast<Eigen::Index>(cout));
      ws_.pool_index.resize(batch * ph * pw * cout);
      const Real* a = ws_.act[l].data();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t y = 0; y < ph; ++y) {
          for (std::size_t x = 0; x < pw; ++x) {
            const std::size_t out_row = (b * ph + y) * pw + x;
            for (std::size_t c = 0; c < cout; ++c) {
              std::size_t best = ((b * h + 2 * y) * w + 2 * x) * cout + c;
              for (std::size_t dy = 0; dy < 2; ++dy) {
                for (std::size_t dx = 0; dx < 2; ++dx) {
                  const std::size_t idx = ((b * h + 2 * y + dy) * w + 2 * x + dx) * cout + c;
                  if (a[idx] > a[best]) best = idx;
                }
              }
              ws_.pooled.data()[out_row * cout + c] = a[best];
              ws_.pool_index[out_row * cout + c] = static_cast<std::uint32_t>(best);
            }
          }
        }
      }
      in = &ws_.pooled;
      h = ph;
      w = pw;
    }
  }

  const std::size_t features = kConvPlan.back().out;
  const std::size_t spatial = height_.back() * width_.back();
  ws_.gap.setZero(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(features));
  const Matrix& last = ws_.act.back();
  for (std::size_t b = 0; b < batch; ++b) {
    ws_.gap.row(static_cast<Eigen::Index>(b)) =
        last.middleRows(static_cast<Eigen::Index>(b * spatial), static_cast<Eigen::Index>(spatial))
            .colwise()
            .sum() /
        static_cast<Real>(spatial);
  }
  ConstMatrixMap head(params_.data() + head_w_.offset, static_cast<Eigen::Index>(features),
                      static_cast<Eigen::Index>(classes_));
  Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> head_bias(
      params_.data() + head_b_.offset, static_cast<Eigen::Index>(classes_));
  ws_.logits.noalias() = ws_.gap * head;
  ws_.logits.rowwise() += head_bias;
}

template <typename Real>
typename MiniConvNet<Real>::BatchResult MiniConvNet<Real>::forward_backward(
    std::span<const float> images, std::span<const int> labels, std::size_t height,
    std::size_t width, std::vector<Real>* gradient, ActivationPattern* pattern) {
  const std::size_t batch = labels.size();
  if (batch == 0) throw ValidationError("empty batch");
  forward(images, batch, height, width);

  BatchResult result;
  ws_.d_logits.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(classes_));
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes_) {
      throw ValidationError("label " + std::to_string(label) + " outside [0, classes)");
    }
    const auto row = ws_.logits.row(static_cast<Eigen::Index>(b));
    Eigen::Index argmax = 0;
    const Real peak = row.maxCoeff(&argmax);
    if (static_cast<int>(argmax) == label) ++result.correct;
    double denom = 0.0;
    for (Eigen::Index c = 0; c < row.size(); ++c) denom += std::exp(static_cast<double>(row(c) - peak));
    loss += std::log(denom) - static_cast<double>(row(label) - peak);
    for (Eigen::Index c = 0; c < row.size(); ++c) {
      const double p = std::exp(static_cast<double>(row(c) - peak)) / denom;
      ws_.d_logits(static_cast<Eigen::Index>(b), c) =
          static_cast<Real>((p - (c == label ? 1.0 : 0.0)) / static_cast<double>(batch));
    }
  }
  result.loss = loss / static_cast<double>(batch);

  if (pattern) {
    pattern->relu.clear();
    for (const Matrix& pre : ws_.pre) {
      for (Eigen::Index i = 0; i < pre.size(); ++i) pattern->relu.push_back(pre.data()[i] > Real(0));
    }
    pattern->pool = ws_.pool_index;
  }
  if (!gradient) return result;

  gradient->assign(params_.size(), Real(0));
  Real* g = gradient->data();
  const std::size_t features = kConvPlan.back().out;

  MatrixMap g_head(g + head_w_.offset, static_cast<Eigen::Index>(features),
                   static_cast<Eigen::Index>(classes_));
  g_head.noalias() = ws_.gap.transpose() * ws_.d_logits;
  Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(g + head_b_.offset,
                                                     static_cast<Eigen::Index>(classes_)) =
      ws_.d_logits.colwise().sum();
  ConstMatrixMap head(params_.data() + head_w_.offset, static_cast<Eigen::Index>(features),
                      static_cast<Eigen::Index>(classes_));
  ws_.d_gap.noalias() = ws_.d_logits * head.transpose();

  // d(act of last conv) from the global average pool.
  const std::size_t last = kConvPlan.size() - 1;
  const std::size_t spatial = height_[last] * width_[last];
  ws_.d_act.resize(ws_.act[last].rows(), ws_.act[last].cols());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < spatial; ++p) {
      ws_.d_act.row(static_cast<Eigen::Index>(b * spatial + p)) =
          ws_.d_gap.row(static_cast<Eigen::Index>(b)) / static_cast<Real>(spatial);
    }
  }

  for (std::size_t l = kConvPlan.size(); l-- > 0;) {
    const std::size_t cin = kConvPlan[l].in, cout = kConvPlan[l].out;
    const std::size_t k = kKernel * kKernel * cin;
    // ReLU gate, in place: d_act becomes d_pre.
    ws_.d_act = (ws_.pre[l].array() > Real(0)).select(ws_.d_act, Real(0));

    MatrixMap g_w(g + conv_w_[l].offset, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cout));
    g_w.noalias() = ws_.col[l].transpose() * ws_.d_act;
    Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(g + conv_b_[l].offset,
                                                       static_cast<Eigen::Index>(cout)) =
        ws_.d_act.colwise().sum();
    if (l == 0) break;

    ConstMatrixMap weight(params_.data() + conv_w_[l].offset, static_cast<Eigen::Index>(k),
                          static_cast<Eigen::Index>(cout));
    ws_.d_col.noalias() = ws_.d_act * weight.transpose();
    const std::size_t h = height_[l], w = width_[l];
    Matrix d_in(static_cast<Eigen::Index>(batch * h * w), static_cast<Eigen::Index>(cin));
    col2im(ws_.d_col.data(), batch, h, w, cin, d_in.data());

    if (l - 1 == kPoolAfter) {
      ws_.d_act.setZero(ws_.act[l - 1].rows(), ws_.act[l - 1].cols());
      for (std::size_t i = 0; i < ws_.pool_index.size(); ++i) {
        ws_.d_act.data()[ws_.pool_index[i]] += d_in.data()[i];
      }
    } else {
      ws_.d_act = std::move(d_in);
    }
  }
  return result;
}

template <typename Real>
std::vector<int> MiniConvNet<Real>::predict(std::span<const float> images, std::size_t count,
                                            std::size_t height, std::size_t width) {
  forward(images, count, height, width);
  std::vector<int> out(count);
  for (std::size_t b = 0; b < count; ++b) {
    Eigen::Index argmax = 0;
    ws_.logits.row(static_cast<Eigen::Index>(b)).maxCoeff(&argmax);
    out[b] = static_cast<int>(argmax);
  }
  return out;
}

template <typename Real>
Snapshot MiniConvNet<Real>::snapshot() const {
  Snapshot s;
  for (std::size_t l = 0; l < kConvPlan.size(); ++l) {
    SnapshotLayer layer;
    layer.name = "conv" + std::to_string(l + 1);
    layer.dims = Dims4{{kKernel, kKernel, kConvPlan[l].in, kConvPlan[l].out}};
    layer.data.resize(conv_w_[l].size);
    for (std::size_t i = 0; i < conv_w_[l].size; ++i) {
      layer.data[i] = static_cast<float>(params_[conv_w_[l].offset + i]);
    }
    s.layers.push_back(std::move(layer));
  }
  return s;
}

template class MiniConvNet<float>;
template class MiniConvNet<double>;

}  // namespace autohyper::trainer
