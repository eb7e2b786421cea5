#include "abyss/imaging/image.hpp"

#include <algorithm>
#include <cmath>

namespace abyss::imaging {

ImageF to_float(const ImageU8& src) {
  ImageF out(src.width, src.height, 0.0f, src.channels);
  std::transform(src.data.begin(), src.data.end(), out.data.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return out;
}

ImageU8 to_u8(const ImageF& src) {
  ImageU8 out(src.width, src.height, 0, src.channels);
  std::transform(src.data.begin(), src.data.end(), out.data.begin(), [](float v) {
    // NaN maps to 0
    const float c = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::round(c * 255.0f));
  });
  return out;
}

ImageU8 crop(const ImageU8& src, int x, int y, int w, int h) {
  if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > src.width || y + h > src.height)
    throw InvalidArgument("crop window outside image");
  ImageU8 out(w, h, 0, src.channels);
  const std::size_t row = static_cast<std::size_t>(w) * src.channels;
  for (int r = 0; r < h; ++r) {
    auto first = src.data.begin() + static_cast<std::ptrdiff_t>(src.index(x, y + r, 0));
    std::copy(first, first + static_cast<std::ptrdiff_t>(row),
              out.data.begin() + static_cast<std::ptrdiff_t>(out.index(0, r, 0)));
  }
  return out;
}

}  // namespace abyss::imaging
