#pragma once

#include "abyss/imaging/image.hpp"

namespace abyss::imaging {

/// Cubic convolution kernel with a = -0.5 (Keys).
double cubic_kernel(double t) noexcept;

/// Separable bicubic resampling. On down-scaling the kernel support is
/// stretched by the scale factor so the result is anti-aliased. Source
/// coordinates outside the image are clamped to the border.
ImageU8 bicubic_resize(const ImageU8& src, int dst_w, int dst_h);

}  // namespace abyss::imaging
