#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "abyss/imaging/image.hpp"

namespace abyss::imaging {

ImageU8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageU8& img);

/// Decodes PNG or JPEG, chosen by the file's magic bytes.
ImageU8 load_image(const std::filesystem::path& path);

/// Width and height from the file header without decoding pixels; nullopt if
/// the file is not a readable PNG/JPEG.
std::optional<std::pair<int, int>> probe_image(const std::filesystem::path& path);

bool has_image_extension(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace abyss::imaging
