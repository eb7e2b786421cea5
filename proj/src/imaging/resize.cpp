#include "abyss/imaging/resize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace abyss::imaging {

namespace {

constexpr double kA = -0.5;

struct Taps {
  std::vector<int> index;  // already clamped to [0, in)
  std::vector<float> weight;
};

std::vector<Taps> compute_taps(int in, int out) {
  const double scale = static_cast<double>(in) / out;
  const double filterscale = std::max(scale, 1.0);
  const double support = 2.0 * filterscale;

  std::vector<Taps> taps(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * scale;
    const int lo = static_cast<int>(std::floor(center - support));
    const int hi = static_cast<int>(std::ceil(center + support));
    std::vector<double> w;
    std::vector<int> idx;
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double k = cubic_kernel((j + 0.5 - center) / filterscale);
      if (k == 0.0) continue;
      w.push_back(k);
      idx.push_back(std::clamp(j, 0, in - 1));
      sum += k;
    }
    auto& t = taps[static_cast<std::size_t>(i)];
    t.index = std::move(idx);
    t.weight.reserve(w.size());
    for (double k : w) t.weight.push_back(static_cast<float>(k / sum));
  }
  return taps;
}

}  // namespace

double cubic_kernel(double t) noexcept {
  t = std::abs(t);
  if (t < 1.0) return ((kA + 2.0) * t - (kA + 3.0)) * t * t + 1.0;
  if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * kA;
  return 0.0;
}

ImageU8 bicubic_resize(const ImageU8& src, int dst_w, int dst_h) {
  if (dst_w < 1 || dst_h < 1) throw InvalidArgument("bicubic_resize: target dimensions must be >= 1");
  if (src.width < 1 || src.height < 1) throw InvalidArgument("bicubic_resize: empty source");

  const int c = src.channels;
  const auto xtaps = compute_taps(src.width, dst_w);
  const auto ytaps = compute_taps(src.height, dst_h);

  // horizontal pass: src.height x dst_w
  std::vector<float> tmp(static_cast<std::size_t>(src.height) * dst_w * c);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < dst_w; ++x) {
      const auto& t = xtaps[static_cast<std::size_t>(x)];
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0.0f;
        for (std::size_t k = 0; k < t.index.size(); ++k)
          acc += t.weight[k] * src.at(t.index[k], y, ch);
        tmp[(static_cast<std::size_t>(y) * dst_w + x) * c + ch] = acc;
      }
    }
  }

  ImageU8 out(dst_w, dst_h, 0, c);
  for (int y = 0; y < dst_h; ++y) {
    const auto& t = ytaps[static_cast<std::size_t>(y)];
    for (int x = 0; x < dst_w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0.0f;
        for (std::size_t k = 0; k < t.index.size(); ++k)
          acc += t.weight[k] * tmp[(static_cast<std::size_t>(t.index[k]) * dst_w + x) * c + ch];
        out.at(x, y, ch) = static_cast<std::uint8_t>(std::round(std::clamp(acc, 0.0f, 255.0f)));
      }
    }
  }
  return out;
}

}  // namespace abyss::imaging
