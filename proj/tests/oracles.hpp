#pragma once
// Test-only reference implementations. Nothing here calls into the code
// paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "abyss/imaging/image.hpp"
#include "abyss/nn/layers.hpp"

namespace oracle {

using abyss::imaging::ImageU8;

inline ImageU8 random_image(int w, int h, std::uint64_t seed) {
  ImageU8 img(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

// Keys cubic with a = -1/2 written out as explicit polynomials.
inline double keys(double x) {
  x = x < 0 ? -x : x;
  if (x < 1) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

// Weights of every source sample for one output coordinate, normalized.
inline std::vector<double> axis_weights(int in, int out, int i) {
  const double scale = double(in) / out;
  const double stretch = scale > 1 ? scale : 1.0;
  const double center = (i + 0.5) * scale;
  std::vector<double> w(static_cast<std::size_t>(in), 0.0);
  double total = 0.0;
  // scan a generous window and fold out-of-range taps onto the border
  for (int j = int(center - 4 * stretch) - 2; j <= int(center + 4 * stretch) + 2; ++j) {
    const double k = keys((j + 0.5 - center) / stretch);
    w[static_cast<std::size_t>(std::clamp(j, 0, in - 1))] += k;
    total += k;
  }
  for (auto& v : w) v /= total;
  return w;
}

// Direct 2-D summation over the full source for every output pixel.
inline ImageU8 direct_bicubic(const ImageU8& src, int dw, int dh) {
  ImageU8 out(dw, dh);
  for (int y = 0; y < dh; ++y) {
    const auto wy = axis_weights(src.height, dh, y);
    for (int x = 0; x < dw; ++x) {
      const auto wx = axis_weights(src.width, dw, x);
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int sy = 0; sy < src.height; ++sy)
          for (int sx = 0; sx < src.width; ++sx) acc += wy[sy] * wx[sx] * src.at(sx, sy, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(acc, 0.0, 255.0)));
      }
    }
  }
  return out;
}

inline double psnr(const ImageU8& a, const ImageU8& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = double(a.data[i]) - double(b.data[i]);
    sum += d * d;
  }
  const double mse = sum / double(a.data.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// k^2 * c_in * c_out + c_out
inline long conv_params(long k, long cin, long cout) { return k * k * cin * cout + cout; }

inline long generator_params(long blocks, long nf, long gc, long stages) {
  long dense = 0;
  for (long i = 0; i < 4; ++i) dense += conv_params(3, nf + i * gc, gc);
  dense += conv_params(3, nf + 4 * gc, nf);
  return conv_params(3, 3, nf) + blocks * 3 * dense + conv_params(3, nf, nf) + stages * conv_params(3, nf, 4 * nf) +
         conv_params(3, nf, nf) + conv_params(3, nf, 3);
}

// Score-map side for the 4x4 pad-1 PatchGAN stack.
inline int patch_map_extent(int n, const std::vector<int>& schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) n = (n + 2 - 4) / (i + 1 < schedule.size() ? 2 : 1) + 1;
  return n + 2 - 4 + 1;
}

// Formula weights shared with tests/oracles/torch_reference.py.
template <typename Scalar>
void formula_weights(const std::vector<abyss::nn::ParamRef<Scalar>>& params) {
  for (std::size_t j = 0; j < params.size(); ++j) {
    const auto& p = params[j];
    if (p.shape.size() == 4) {
      const double fan_in = double(p.shape[1]) * p.shape[2] * p.shape[3];
      for (std::size_t i = 0; i < p.size; ++i)
        p.value[i] = Scalar(0.5 * std::sin(0.7 * double(i) + 0.3 * double(j) + 0.1) / std::sqrt(fan_in));
    } else {
      for (std::size_t i = 0; i < p.size; ++i) p.value[i] = Scalar(0.05 * std::cos(0.9 * double(i) + 0.3 * double(j)));
    }
  }
}

template <typename Scalar>
void formula_input(abyss::nn::Tensor<Scalar>& t) {
  for (Eigen::Index i = 0; i < t.vec().size(); ++i) t.vec()[i] = Scalar(0.5 + 0.4 * std::sin(1.7 * double(i) + 0.2));
}

}  // namespace oracle

namespace oracle {

// Direct 2-D convolution: y[o][oy][ox] = b[o] + sum w[o][c][ky][kx] * x[c][oy*s-p+ky][ox*s-p+kx].
struct DirectConv {
  int cin, cout, k, s, p;
  std::vector<double> w, b;

  int extent(int n) const { return (n + 2 * p - k) / s + 1; }
  double wt(int o, int c, int ky, int kx) const { return w[((std::size_t(o) * cin + c) * k + ky) * k + kx]; }

  abyss::nn::Tensor<double> forward(const abyss::nn::Tensor<double>& x) const {
    abyss::nn::Tensor<double> y(x.n(), cout, extent(x.h()), extent(x.w()));
    for (int n = 0; n < x.n(); ++n)
      for (int o = 0; o < cout; ++o)
        for (int oy = 0; oy < y.h(); ++oy)
          for (int ox = 0; ox < y.w(); ++ox) {
            double acc = b[o];
            for (int c = 0; c < cin; ++c)
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                  const int iy = oy * s - p + ky, ix = ox * s - p + kx;
                  if (iy >= 0 && iy < x.h() && ix >= 0 && ix < x.w()) acc += wt(o, c, ky, kx) * x(n, c, iy, ix);
                }
            y(n, o, oy, ox) = acc;
          }
    return y;
  }

  // Gradients of sum(y * dy) with respect to x and w.
  void backward(const abyss::nn::Tensor<double>& x, const abyss::nn::Tensor<double>& dy, abyss::nn::Tensor<double>& dx,
                std::vector<double>& dw) const {
    dx = abyss::nn::Tensor<double>(x.shape());
    dw.assign(w.size(), 0.0);
    for (int n = 0; n < x.n(); ++n)
      for (int o = 0; o < cout; ++o)
        for (int oy = 0; oy < dy.h(); ++oy)
          for (int ox = 0; ox < dy.w(); ++ox)
            for (int c = 0; c < cin; ++c)
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                  const int iy = oy * s - p + ky, ix = ox * s - p + kx;
                  if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                  const double g = dy(n, o, oy, ox);
                  dx(n, c, iy, ix) += wt(o, c, ky, kx) * g;
                  dw[((std::size_t(o) * cin + c) * k + ky) * k + kx] += x(n, c, iy, ix) * g;
                }
  }
};

}  // namespace oracle
