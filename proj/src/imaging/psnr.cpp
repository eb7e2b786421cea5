#include "abyss/imaging/psnr.hpp"

#include <cmath>
#include <cstdint>

namespace abyss::imaging {

double mse(const ImageU8& a, const ImageU8& b) {
  if (!a.same_shape(b)) throw InvalidArgument("psnr: image dimensions differ");
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(a.data[i]) - b.data[i];
    acc += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(acc) / static_cast<double>(a.data.size());
}

double psnr(const ImageU8& a, const ImageU8& b) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

}  // namespace abyss::imaging
