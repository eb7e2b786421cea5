#pragma once

#include <algorithm>
#include <cassert>
#include <vector>

#include <Eigen/Core>

#include "abyss/nn/tensor.hpp"

namespace abyss::nn {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A parameter block and its gradient accumulator, addressed by canonical name.
template <typename Scalar>
struct ParamRef {
  std::string name;
  std::vector<int> shape;
  Scalar* value;
  Scalar* grad;
  std::size_t size;
};

/// 2-D convolution, weight laid out [out][in][kh][kw] (row-major out x in*k*k).
/// Lowered to one GEMM per batch item over an im2col buffer.
template <typename Scalar>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad)
      : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(pad),
        weight(RowMatrix<Scalar>::Zero(out_channels, in_channels * kernel * kernel)),
        bias(Vec<Scalar>::Zero(out_channels)),
        grad_weight(RowMatrix<Scalar>::Zero(out_channels, in_channels * kernel * kernel)),
        grad_bias(Vec<Scalar>::Zero(out_channels)) {}

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }
  int kernel() const noexcept { return k_; }
  int stride() const noexcept { return stride_; }
  int pad() const noexcept { return pad_; }
  std::size_t fan_in() const noexcept { return static_cast<std::size_t>(in_) * k_ * k_; }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(weight.size() + bias.size()); }

  int out_extent(int in) const noexcept { return (in + 2 * pad_ - k_) / stride_ + 1; }
  Shape output_shape(const Shape& s) const noexcept { return {s.n, out_, out_extent(s.h), out_extent(s.w)}; }

  void forward(ConstView<Scalar> x, MutView<Scalar> y) const {
    check_input(x.shape);
    const Shape os = output_shape(x.shape);
    const Eigen::Index pixels = static_cast<Eigen::Index>(os.plane());
    const int rows = tile_rows(os.w);
    RowMatrix<Scalar> cols(weight.cols(), static_cast<Eigen::Index>(rows) * os.w);
    for (int b = 0; b < x.shape.n; ++b) {
      Eigen::Map<RowMatrix<Scalar>> out(y.item(b), out_, pixels);
      for (int y0 = 0; y0 < os.h; y0 += rows) {
        const int y1 = std::min(os.h, y0 + rows);
        const Eigen::Index n = static_cast<Eigen::Index>(y1 - y0) * os.w;
        im2col(x.item(b), x.shape.h, x.shape.w, y0, y1, os.w, cols.data());
        auto block = out.middleCols(static_cast<Eigen::Index>(y0) * os.w, n);
        block.noalias() = weight * Eigen::Map<const RowMatrix<Scalar>>(cols.data(), weight.cols(), n);
        block.colwise() += bias;
      }
    }
  }

  /// Accumulates parameter gradients (unless `accumulate_params` is false)
  /// and, when `dx` is given, adds the input gradient into it.
  void backward(ConstView<Scalar> x, ConstView<Scalar> dy, MutView<Scalar>* dx, bool accumulate_params = true) {
    const Shape os = output_shape(x.shape);
    const Eigen::Index pixels = static_cast<Eigen::Index>(os.plane());
    const int rows = tile_rows(os.w);
    RowMatrix<Scalar> cols(weight.cols(), static_cast<Eigen::Index>(rows) * os.w);
    for (int b = 0; b < x.shape.n; ++b) {
      Eigen::Map<const RowMatrix<Scalar>> g(dy.item(b), out_, pixels);
      if (accumulate_params) grad_bias += g.rowwise().sum();
      for (int y0 = 0; y0 < os.h; y0 += rows) {
        const int y1 = std::min(os.h, y0 + rows);
        const Eigen::Index n = static_cast<Eigen::Index>(y1 - y0) * os.w;
        const auto gb = g.middleCols(static_cast<Eigen::Index>(y0) * os.w, n);
        Eigen::Map<RowMatrix<Scalar>> tile(cols.data(), weight.cols(), n);
        if (accumulate_params) {
          im2col(x.item(b), x.shape.h, x.shape.w, y0, y1, os.w, cols.data());
          grad_weight.noalias() += gb * tile.transpose();
        }
        if (dx != nullptr) {
          tile.noalias() = weight.transpose() * gb;
          col2im(cols.data(), x.shape.h, x.shape.w, y0, y1, os.w, dx->item(b));
        }
      }
    }
  }

  void zero_grad() {
    grad_weight.setZero();
    grad_bias.setZero();
  }

  void collect(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
    out.push_back({prefix + ".weight", {out_, in_, k_, k_}, weight.data(), grad_weight.data(),
                   static_cast<std::size_t>(weight.size())});
    out.push_back({prefix + ".bias", {out_}, bias.data(), grad_bias.data(), static_cast<std::size_t>(bias.size())});
  }

 private:
  void check_input(const Shape& s) const {
    if (s.c != in_) throw InvalidArgument("conv: expected " + std::to_string(in_) + " input channels, got " + std::to_string(s.c));
    if (s.h + 2 * pad_ < k_ || s.w + 2 * pad_ < k_) throw InvalidArgument("conv: input smaller than kernel");
  }

  // Output rows per GEMM tile, sized so the column buffer stays cache-resident.
  int tile_rows(int ow) const noexcept {
    const std::size_t budget = (std::size_t(1) << 20) / sizeof(Scalar);
    const std::size_t per_row = fan_in() * static_cast<std::size_t>(ow);
    return static_cast<int>(std::max<std::size_t>(1, budget / std::max<std::size_t>(per_row, 1)));
  }

  // Column rows hold output rows [y0, y1) of each (channel, ky, kx) tap.
  void im2col(const Scalar* x, int h, int w, int y0, int y1, int ow, Scalar* cols) const {
    for (int ci = 0; ci < in_; ++ci) {
      const Scalar* plane = x + static_cast<std::ptrdiff_t>(ci) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          Scalar* row = cols;
          cols += static_cast<std::ptrdiff_t>(y1 - y0) * ow;
          for (int oy = y0; oy < y1; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            Scalar* dst = row + static_cast<std::ptrdiff_t>(oy - y0) * ow;
            if (iy < 0 || iy >= h) {
              std::fill(dst, dst + ow, Scalar(0));
              continue;
            }
            const Scalar* src = plane + static_cast<std::ptrdiff_t>(iy) * w;
            if (stride_ == 1) {
              const int lo = std::clamp(pad_ - kx, 0, ow);
              const int hi = std::clamp(w + pad_ - kx, lo, ow);
              std::fill(dst, dst + lo, Scalar(0));
              std::copy(src + lo - pad_ + kx, src + hi - pad_ + kx, dst + lo);
              std::fill(dst + hi, dst + ow, Scalar(0));
              continue;
            }
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              dst[ox] = (ix >= 0 && ix < w) ? src[ix] : Scalar(0);
            }
          }
        }
      }
    }
  }

  void col2im(const Scalar* cols, int h, int w, int y0, int y1, int ow, Scalar* x) const {
    for (int ci = 0; ci < in_; ++ci) {
      Scalar* plane = x + static_cast<std::ptrdiff_t>(ci) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const Scalar* row = cols;
          cols += static_cast<std::ptrdiff_t>(y1 - y0) * ow;
          for (int oy = y0; oy < y1; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) continue;
            const Scalar* src = row + static_cast<std::ptrdiff_t>(oy - y0) * ow;
            Scalar* dst = plane + static_cast<std::ptrdiff_t>(iy) * w;
            if (stride_ == 1) {
              const int lo = std::clamp(pad_ - kx, 0, ow);
              const int hi = std::clamp(w + pad_ - kx, lo, ow);
              Eigen::Map<Vec<Scalar>>(dst + lo - pad_ + kx, hi - lo) +=
                  Eigen::Map<const Vec<Scalar>>(src + lo, hi - lo);
              continue;
            }
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < w) dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }

  int in_ = 0;
  int out_ = 0;
  int k_ = 1;
  int stride_ = 1;
  int pad_ = 0;

 public:
  RowMatrix<Scalar> weight;
  Vec<Scalar> bias;
  RowMatrix<Scalar> grad_weight;
  Vec<Scalar> grad_bias;
};

template <typename Scalar>
void leaky_relu_inplace(MutView<Scalar> v, Scalar slope) {
  assert(slope >= Scalar(0) && slope <= Scalar(1));
  // max(x, slope * x) equals the leaky ReLU for slopes in [0, 1]
  const auto count = static_cast<Eigen::Index>(v.shape.item());
  for (int b = 0; b < v.shape.n; ++b) {
    Eigen::Map<Vec<Scalar>> m(v.item(b), count);
    m = m.cwiseMax(m * slope);
  }
}

/// Multiplies the incoming gradient by the activation's derivative, read off
/// the activation output (positive output iff positive input).
template <typename Scalar>
void leaky_relu_backward_inplace(ConstView<Scalar> out, MutView<Scalar> grad, Scalar slope) {
  const auto count = static_cast<std::size_t>(out.shape.item());
  for (int b = 0; b < out.shape.n; ++b) {
    const Scalar* o = out.item(b);
    Scalar* g = grad.item(b);
    const Scalar factor[2] = {slope, Scalar(1)};
    for (std::size_t i = 0; i < count; ++i) g[i] *= factor[o[i] > Scalar(0)];
  }
}

/// Sub-pixel rearrangement: (C*r*r, H, W) -> (C, H*r, W*r), with
/// out[c][y*r+i][x*r+j] = in[c*r*r + i*r + j][y][x].
template <typename Scalar>
Tensor<Scalar> pixel_shuffle(const Tensor<Scalar>& in, int r) {
  if (in.c() % (r * r) != 0) throw InvalidArgument("pixel_shuffle: channels not divisible by r^2");
  const int oc = in.c() / (r * r);
  Tensor<Scalar> out(in.n(), oc, in.h() * r, in.w() * r);
  const int w = in.w(), h = in.h();
  const std::size_t plane = in.shape().plane();
  for (int b = 0; b < in.n(); ++b)
    for (int c = 0; c < oc; ++c)
      for (int y = 0; y < h; ++y)
        for (int i = 0; i < r; ++i) {
          Scalar* dst = &out(b, c, y * r + i, 0);
          const Scalar* src = in.data() + in.index(b, c * r * r + i * r, y, 0);
          for (int j = 0; j < r; ++j, src += plane)
            for (int x = 0; x < w; ++x) dst[x * r + j] = src[x];
        }
  return out;
}

/// Inverse permutation of pixel_shuffle; also its exact adjoint.
template <typename Scalar>
Tensor<Scalar> pixel_unshuffle(const Tensor<Scalar>& in, int r) {
  if (in.h() % r != 0 || in.w() % r != 0) throw InvalidArgument("pixel_unshuffle: extent not divisible by r");
  Tensor<Scalar> out(in.n(), in.c() * r * r, in.h() / r, in.w() / r);
  const int w = out.w(), h = out.h();
  const std::size_t plane = out.shape().plane();
  for (int b = 0; b < in.n(); ++b)
    for (int c = 0; c < in.c(); ++c)
      for (int y = 0; y < h; ++y)
        for (int i = 0; i < r; ++i) {
          const Scalar* src = in.data() + in.index(b, c, y * r + i, 0);
          Scalar* dst = &out(b, c * r * r + i * r, y, 0);
          for (int j = 0; j < r; ++j, dst += plane)
            for (int x = 0; x < w; ++x) dst[x] = src[x * r + j];
        }
  return out;
}

}  // namespace abyss::nn
