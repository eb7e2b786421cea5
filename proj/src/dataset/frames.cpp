#include <algorithm>
#include <cctype>
#include <system_error>

#include "abyss/dataset.hpp"
#include "abyss/error.hpp"
#include "abyss/imaging/image_io.hpp"

#ifdef ABYSS_WITH_VIDEO
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>
#endif

namespace fs = std::filesystem;

namespace abyss::dataset {

namespace {

#ifdef ABYSS_WITH_VIDEO
// Counted by decoding; container frame-count metadata is not trustworthy.
long count_video_frames(const fs::path& path) {
  cv::VideoCapture cap(path.string());
  if (!cap.isOpened()) return -1;
  long n = 0;
  while (cap.grab()) ++n;
  return n;
}
#endif

}  // namespace

bool video_supported() noexcept {
#ifdef ABYSS_WITH_VIDEO
  return true;
#else
  return false;
#endif
}

bool has_video_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".mp4" || ext == ".avi" || ext == ".mov" || ext == ".mkv" || ext == ".m4v";
}

FrameSample sample_frames(const fs::path& corpus_root, long stride) {
  if (stride < 1) throw InvalidArgument("sample_frames: stride must be >= 1");
  std::error_code ec;
  if (!fs::is_directory(corpus_root, ec)) throw IoError("corpus root is not a readable directory: " + corpus_root.string());

  FrameSample out;
  std::vector<fs::path> sessions;
  for (const auto& e : fs::directory_iterator(corpus_root, ec)) {
    if (e.is_directory())
      sessions.push_back(e.path());
    else if (imaging::has_image_extension(e.path()) || has_video_extension(e.path()))
      out.warnings.push_back(e.path().string() + ": file outside a session directory, skipped");
  }
  if (ec) throw IoError("cannot list corpus root " + corpus_root.string() + ": " + ec.message());
  std::sort(sessions.begin(), sessions.end());

  for (const auto& dir : sessions) {
    const std::string session = dir.filename().string();
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(dir, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (ec) {
        out.warnings.push_back(dir.string() + ": " + ec.message());
        break;
      }
      if (it->is_regular_file() && (imaging::has_image_extension(it->path()) || has_video_extension(it->path())))
        files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());

    long position = 0;  // within the session's frame stream
    for (const auto& f : files) {
      if (imaging::has_image_extension(f)) {
        if (!imaging::probe_image(f)) {
          out.warnings.push_back(f.string() + ": unreadable image, skipped");
          continue;
        }
        if (position % stride == 0) out.records.push_back({session, f.string(), 0});
        ++position;
        continue;
      }
#ifdef ABYSS_WITH_VIDEO
      const long frames = count_video_frames(f);
      if (frames <= 0) {
        out.warnings.push_back(f.string() + ": unreadable video, skipped");
        continue;
      }
      for (long i = 0; i < frames; ++i, ++position)
        if (position % stride == 0) out.records.push_back({session, f.string(), i});
#else
      out.warnings.push_back(f.string() + ": video support not built in, skipped");
#endif
    }
  }
  return out;
}

ImageU8 load_frame(const FrameRecord& record) {
  const fs::path path(record.source_path);
  if (!has_video_extension(path)) {
    if (record.frame_index != 0) throw InvalidArgument(record.source_path + ": still image with nonzero frame index");
    return imaging::load_image(path);
  }
#ifdef ABYSS_WITH_VIDEO
  cv::VideoCapture cap(path.string());
  if (!cap.isOpened()) throw IoError("cannot open video " + record.source_path);
  if (record.frame_index > 0) cap.set(cv::CAP_PROP_POS_FRAMES, static_cast<double>(record.frame_index));
  cv::Mat bgr;
  if (!cap.read(bgr) || bgr.empty())
    throw IoError("cannot read frame " + std::to_string(record.frame_index) + " of " + record.source_path);
  cv::Mat rgb;
  if (bgr.channels() == 1)
    cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
  else
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  ImageU8 img(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y)
    std::copy(rgb.ptr<std::uint8_t>(y), rgb.ptr<std::uint8_t>(y) + static_cast<std::ptrdiff_t>(rgb.cols) * 3,
              img.data.begin() + static_cast<std::ptrdiff_t>(img.index(0, y, 0)));
  return img;
#else
  throw IoError("video support not built in: " + record.source_path);
#endif
}

}  // namespace abyss::dataset
