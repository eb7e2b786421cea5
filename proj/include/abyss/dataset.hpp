#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "abyss/imaging/image.hpp"

namespace abyss::dataset {

using imaging::ImageU8;

inline constexpr int kHrSize = 256;
inline constexpr int kLrSize = 32;
inline constexpr std::size_t kDefaultBudget = 1024;

/// One sampled frame. Stills carry frame_index 0; video frames carry their
/// index within the file. The session is the top-level corpus directory.
struct FrameRecord {
  std::string session_id;
  std::string source_path;
  long frame_index = 0;
  auto operator<=>(const FrameRecord&) const = default;
};

struct FrameSample {
  std::vector<FrameRecord> records;
  std::vector<std::string> warnings;
};

/// Walks `corpus_root`: each top-level directory is one session. Inside a
/// session, files are visited in sorted path order and form one frame
/// stream (a still is one frame, a video contributes all its frames); every
/// `stride`-th frame of the stream is recorded. Unreadable files are skipped
/// and reported as warnings.
FrameSample sample_frames(const std::filesystem::path& corpus_root, long stride);

struct SplitManifest {
  std::vector<FrameRecord> train;
  std::vector<FrameRecord> test;
  std::uint64_t seed = 0;
  double ratio = 0.8;
  bool operator==(const SplitManifest&) const = default;
};

/// Whole sessions are shuffled with the seed and moved to train until the
/// train frame count reaches ratio * total. At least one session always
/// ends up on each side.
SplitManifest split_by_session(const std::vector<FrameRecord>& records, double ratio, std::uint64_t seed);

/// Text form: `#split seed=<int> ratio=<float>` header, then a `#train`
/// section and a `#test` section of `session<TAB>path<TAB>frame` lines.
void write_manifest(std::ostream& os, const SplitManifest& m);
void save_manifest(const std::filesystem::path& path, const SplitManifest& m);
SplitManifest read_manifest(std::istream& is);
SplitManifest load_manifest(const std::filesystem::path& path);

/// Decodes the frame a record points at (still image or video frame).
ImageU8 load_frame(const FrameRecord& record);

/// True when the build can read video containers.
bool video_supported() noexcept;
bool has_video_extension(const std::filesystem::path& path);

/// Aligned training sample. `payload_bytes` is the JPEG size the LR side
/// went through when degraded, 0 otherwise.
struct PatchPair {
  ImageU8 hr;
  ImageU8 lr;
  bool degraded = false;
  std::size_t payload_bytes = 0;
};

/// Seeded 256x256 crop of `hr_source`, bicubic-reduced to 32x32 and, when
/// `degrade` is set, passed through the budgeted JPEG round trip.
PatchPair make_pair(const ImageU8& hr_source, std::uint64_t crop_seed, bool degrade, std::size_t budget);

/// Per-record crop seed used when pairs are generated from a manifest.
std::uint64_t record_crop_seed(std::uint64_t seed, std::size_t index) noexcept;

}  // namespace abyss::dataset
