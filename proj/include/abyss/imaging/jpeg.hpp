#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "abyss/imaging/image.hpp"

namespace abyss::imaging {

enum class Codec { Jpeg };

/// A compressed image as it goes on the wire. `bytes` is a plain JFIF
/// stream with no wrapper.
struct EncodedPayload {
  std::vector<std::uint8_t> bytes;
  Codec codec = Codec::Jpeg;
  int quality = 0;
  int source_width = 0;
  int source_height = 0;
  std::size_t budget = 0;
};

inline constexpr int kMinJpegQuality = 1;
inline constexpr int kMaxJpegQuality = 95;
/// Smallest budget worth asking for; JFIF headers alone take a few hundred
/// bytes, so anything below this is always infeasible.
inline constexpr std::size_t kMinJpegBudget = 128;

/// Baseline JPEG, 4:2:0 chroma subsampling.
std::vector<std::uint8_t> encode_jpeg(const ImageU8& src, int quality);

/// Highest quality in [1, 95] whose encoding fits in `budget` bytes, found by
/// binary search. Throws BudgetInfeasible when even quality 1 is too large.
EncodedPayload encode_budget_jpeg(const ImageU8& src, std::size_t budget);

/// Throws DecodeError on corrupt or truncated input (libjpeg warnings are
/// promoted to errors).
ImageU8 decode_jpeg(std::span<const std::uint8_t> bytes);
ImageU8 decode_jpeg(const EncodedPayload& payload);

}  // namespace abyss::imaging
