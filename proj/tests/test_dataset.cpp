#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "abyss/dataset.hpp"
#include "abyss/error.hpp"
#include "abyss/imaging/image_io.hpp"
#include "abyss/imaging/psnr.hpp"
#include "abyss/imaging/resize.hpp"

#ifdef ABYSS_WITH_VIDEO
#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>
#endif

namespace fs = std::filesystem;
using namespace abyss;
using namespace abyss::dataset;

namespace {

const fs::path kData = ABYSS_TEST_DATA;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_stills(const fs::path& dir, int count) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "f%04d.png", i);
    imaging::write_png(dir / name, ImageU8(8, 8, static_cast<std::uint8_t>(i)));
  }
}

std::vector<FrameRecord> synthetic(int sessions, int frames, std::uint64_t tag = 0) {
  std::vector<FrameRecord> out;
  for (int s = 0; s < sessions; ++s)
    for (int f = 0; f < frames; ++f)
      out.push_back({"trawl" + std::to_string(tag) + "_" + std::to_string(s), "v" + std::to_string(s) + ".mp4", f});
  return out;
}

std::set<std::string> sessions_of(const std::vector<FrameRecord>& rs) {
  std::set<std::string> out;
  for (const auto& r : rs) out.insert(r.session_id);
  return out;
}

}  // namespace

TEST_CASE("still sampling") {
  TempDir tmp("abyss_ds_stills");
  write_stills(tmp.path / "trawl_a", 100);
  write_stills(tmp.path / "trawl_b" / "nested", 100);

  const auto s10 = sample_frames(tmp.path, 10);
  CHECK(s10.records.size() == 20);
  CHECK(sessions_of(s10.records) == std::set<std::string>{"trawl_a", "trawl_b"});
  CHECK(s10.warnings.empty());
  CHECK(s10.records.front().source_path == (tmp.path / "trawl_a" / "f0000.png").string());
  CHECK(s10.records[1].source_path == (tmp.path / "trawl_a" / "f0010.png").string());

  const auto s1 = sample_frames(tmp.path, 1);
  CHECK(s1.records.size() == 200);
  CHECK(sample_frames(tmp.path, 1).records == s1.records);
  CHECK(load_frame(s1.records[37]).at(0, 0, 0) == 37);
  CHECK_THROWS_AS(sample_frames(tmp.path, 0), InvalidArgument);
}

TEST_CASE("unreadable files become warnings") {
  TempDir tmp("abyss_ds_warn");
  write_stills(tmp.path / "s1", 3);
  std::ofstream(tmp.path / "s1" / "broken.png") << "not a png";
  std::ofstream(tmp.path / "loose.png") << "x";
  const auto s = sample_frames(tmp.path, 1);
  CHECK(s.records.size() == 3);
  CHECK(s.warnings.size() == 2);
  CHECK_THROWS_AS(sample_frames(tmp.path / "missing", 1), IoError);
}

TEST_CASE("video sampling at one frame per second") {
  if (!video_supported()) {
    MESSAGE("built without video support");
    return;
  }
#ifdef ABYSS_WITH_VIDEO
  TempDir tmp("abyss_ds_video");
  fs::create_directories(tmp.path / "trawl");
  const auto clip = (tmp.path / "trawl" / "clip.avi").string();
  {
    cv::VideoWriter w(clip, cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), 25.0, cv::Size(32, 24));
    REQUIRE(w.isOpened());
    for (int i = 0; i < 25 * 40; ++i) w.write(cv::Mat(24, 32, CV_8UC3, cv::Scalar(i % 256, 80, 160)));
  }
  const auto s = sample_frames(tmp.path, 25);
  REQUIRE(s.records.size() == 40);
  for (std::size_t i = 0; i < s.records.size(); ++i) CHECK(s.records[i].frame_index == long(25 * i));
  const auto frame = load_frame(s.records[3]);
  CHECK(frame.width == 32);
  CHECK(frame.height == 24);
  CHECK(std::abs(int(frame.at(5, 5, 2)) - 75) <= 3);  // BGR blue channel -> RGB index 2
#endif
}

TEST_CASE("split basics") {
  const auto two = synthetic(2, 30);
  const auto m = split_by_session(two, 0.5, 1);
  CHECK(sessions_of(m.train).size() == 1);
  CHECK(sessions_of(m.test).size() == 1);
  CHECK(m.train.size() + m.test.size() == two.size());

  const auto ten = split_by_session(synthetic(10, 100), 0.8, 7);
  // equal sessions of 100: the smallest whole-session count reaching 800
  CHECK(ten.train.size() == 800);
  CHECK(ten.test.size() == 200);
  CHECK(split_by_session(synthetic(10, 100), 0.8, 7) == ten);

  CHECK_THROWS_AS(split_by_session(synthetic(1, 10), 0.8, 1), InvalidArgument);
  CHECK_THROWS_AS(split_by_session(two, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(split_by_session(two, 0.0, 1), InvalidArgument);
}

TEST_CASE("property: splits never leak sessions") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FrameRecord> rs;
    const int sessions = 2 + int(rng() % 12);
    for (int s = 0; s < sessions; ++s) {
      const int frames = 1 + int(rng() % 60);
      for (int f = 0; f < frames; ++f) rs.push_back({"s" + std::to_string(s), "p" + std::to_string(s), f});
    }
    std::shuffle(rs.begin(), rs.end(), rng);
    const double ratio = 0.05 + 0.9 * double(rng() % 1000) / 1000.0;
    const auto m = split_by_session(rs, ratio, rng());
    const auto a = sessions_of(m.train), b = sessions_of(m.test);
    for (const auto& s : a) REQUIRE(b.count(s) == 0);
    CHECK(m.train.size() + m.test.size() == rs.size());
    CHECK_FALSE(m.test.empty());
    std::multiset<FrameRecord> all(rs.begin(), rs.end()), got(m.train.begin(), m.train.end());
    got.insert(m.test.begin(), m.test.end());
    CHECK(all == got);
  }
}

TEST_CASE("manifest round trip") {
  auto m = split_by_session(synthetic(5, 7), 0.6, 1234);
  std::ostringstream os;
  write_manifest(os, m);
  const std::string text = os.str();
  CHECK(text.rfind("#split seed=1234 ratio=0.6\n", 0) == 0);
  std::istringstream is(text);
  CHECK(read_manifest(is) == m);

  TempDir tmp("abyss_ds_manifest");
  save_manifest(tmp.path / "m.txt", m);
  CHECK(load_manifest(tmp.path / "m.txt") == m);

  std::istringstream bad1("no header\n");
  CHECK_THROWS_AS(read_manifest(bad1), InvalidArgument);
  std::istringstream bad2("#split seed=1 ratio=0.5\n#train\nonly\ttwo\n");
  CHECK_THROWS_AS(read_manifest(bad2), InvalidArgument);
}

TEST_CASE("patch pairs") {
  SUBCASE("constant source") {
    const auto p = make_pair(ImageU8(300, 280, 90), 5, false, 1024);
    CHECK(p.lr == ImageU8(32, 32, 90));
    CHECK_FALSE(p.degraded);
    CHECK(p.payload_bytes == 0);
  }
  SUBCASE("alignment and scale") {
    const auto src = imaging::read_png(kData / "astronaut.png");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = make_pair(src, seed, false, 1024);
      CHECK(p.hr.width == 8 * p.lr.width);
      CHECK(p.hr.height == 8 * p.lr.height);
      CHECK(imaging::bicubic_resize(p.hr, 32, 32) == p.lr);
    }
    CHECK(make_pair(src, 4, true, 1024).hr == make_pair(src, 4, false, 1024).hr);
    CHECK(make_pair(src, 4, true, 1024).lr == make_pair(src, 4, true, 1024).lr);
  }
  SUBCASE("degradation baseline") {
    const auto src = imaging::read_png(kData / "astronaut.png");
    REQUIRE(src.width == 512);
    REQUIRE(src.height == 512);
    const auto clean = make_pair(src, 3, false, 1024);
    const auto p = make_pair(src, 3, true, 1024);
    CHECK(p.degraded);
    CHECK(p.payload_bytes <= 1024);
    CHECK(p.payload_bytes > 0);
    const double db = imaging::psnr(p.lr, clean.lr);
    CHECK(p.payload_bytes == 1023);
    CHECK(db == doctest::Approx(28.271474655021219).epsilon(1e-9));
  }
  SUBCASE("small source") {
    CHECK_THROWS_AS(make_pair(ImageU8(255, 400), 1, false, 1024), InvalidArgument);
  }
}

TEST_CASE("record crop seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 1000; ++i) seen.insert(record_crop_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(record_crop_seed(1, 0) != record_crop_seed(2, 0));
}
