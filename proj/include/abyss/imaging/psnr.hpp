#pragma once

#include "abyss/imaging/image.hpp"

namespace abyss::imaging {

/// Returned when the two images are identical.
inline constexpr double kPsnrCap = 100.0;

/// 10 * log10(255^2 / MSE) over every RGB sample jointly.
double psnr(const ImageU8& a, const ImageU8& b);

double mse(const ImageU8& a, const ImageU8& b);

}  // namespace abyss::imaging
