#include <random>

#include "abyss/dataset.hpp"
#include "abyss/error.hpp"
#include "abyss/imaging/jpeg.hpp"
#include "abyss/imaging/resize.hpp"

namespace abyss::dataset {

PatchPair make_pair(const ImageU8& hr_source, std::uint64_t crop_seed, bool degrade, std::size_t budget) {
  if (hr_source.width < kHrSize || hr_source.height < kHrSize)
    throw InvalidArgument("make_pair: source must be at least 256x256, got " + std::to_string(hr_source.width) + "x" +
                          std::to_string(hr_source.height));
  std::mt19937_64 rng(crop_seed);
  std::uniform_int_distribution<int> xs(0, hr_source.width - kHrSize);
  std::uniform_int_distribution<int> ys(0, hr_source.height - kHrSize);
  const int x = xs(rng);
  const int y = ys(rng);

  PatchPair p;
  p.hr = imaging::crop(hr_source, x, y, kHrSize, kHrSize);
  p.lr = imaging::bicubic_resize(p.hr, kLrSize, kLrSize);
  if (degrade) {
    const auto payload = imaging::encode_budget_jpeg(p.lr, budget);
    p.lr = imaging::decode_jpeg(payload);
    p.degraded = true;
    p.payload_bytes = payload.bytes.size();
  }
  return p;
}

std::uint64_t record_crop_seed(std::uint64_t seed, std::size_t index) noexcept {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace abyss::dataset
