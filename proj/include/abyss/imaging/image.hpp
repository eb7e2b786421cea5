#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "abyss/error.hpp"

namespace abyss::imaging {

/// Row-major interleaved raster. Channel count is 3 (RGB) throughout the
/// pipeline; the field is kept so the layout is self-describing.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}, int c = 3) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1 || c < 1) throw InvalidArgument("image dimensions must be positive");
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  std::size_t size() const noexcept { return data.size(); }
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c) noexcept { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c) const noexcept { return data[index(x, y, c)]; }

  bool same_shape(const Image& o) const noexcept {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool operator==(const Image&) const = default;
};

using ImageU8 = Image<std::uint8_t>;
using ImageF = Image<float>;

/// Samples divided by 255.
ImageF to_float(const ImageU8& src);

/// Clamps to [0, 1], scales by 255 and rounds half away from zero.
ImageU8 to_u8(const ImageF& src);

/// Copies the w x h window whose top-left corner is (x, y).
ImageU8 crop(const ImageU8& src, int x, int y, int w, int h);

}  // namespace abyss::imaging
