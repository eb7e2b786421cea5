#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <random>

#include "abyss/imaging/image.hpp"
#include "abyss/imaging/image_io.hpp"
#include "abyss/imaging/jpeg.hpp"
#include "abyss/imaging/psnr.hpp"
#include "abyss/imaging/resize.hpp"
#include "oracles.hpp"

using namespace abyss;
using namespace abyss::imaging;

namespace {

const std::filesystem::path kData = ABYSS_TEST_DATA;

ImageU8 natural() {
  static const ImageU8 img = read_png(kData / "astronaut.png");
  return img;
}

int max_abs_diff(const ImageU8& a, const ImageU8& b) {
  int m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(int(a.data[i]) - int(b.data[i])));
  return m;
}

}  // namespace

TEST_CASE("float conversion round-trips every 8-bit sample") {
  ImageU8 img(256, 1);
  for (int v = 0; v < 256; ++v)
    for (int c = 0; c < 3; ++c) img.at(v, 0, c) = static_cast<std::uint8_t>(v);
  const auto f = to_float(img);
  CHECK(f.at(255, 0, 0) == 1.0f);
  CHECK(f.at(0, 0, 0) == 0.0f);
  CHECK(to_u8(f) == img);
}

TEST_CASE("to_u8 clamps and rounds half away from zero") {
  ImageF f(4, 1);
  f.at(0, 0, 0) = -0.3f;
  f.at(1, 0, 0) = 1.7f;
  f.at(2, 0, 0) = 0.5f / 255.0f + 1e-7f;
  f.at(3, 0, 0) = 2.5f / 255.0f + 1e-7f;
  const auto u = to_u8(f);
  CHECK(u.at(0, 0, 0) == 0);
  CHECK(u.at(1, 0, 0) == 255);
  CHECK(u.at(2, 0, 0) == 1);
  CHECK(u.at(3, 0, 0) == 3);
}

TEST_CASE("image construction rejects empty dimensions") {
  CHECK_THROWS_AS(ImageU8(0, 4), InvalidArgument);
  CHECK_THROWS_AS(ImageU8(4, 0), InvalidArgument);
}

TEST_CASE("bicubic resize") {
  SUBCASE("constant field is a fixed point") {
    const ImageU8 gray(256, 256, 128);
    const auto small = bicubic_resize(gray, 32, 32);
    CHECK(small.width == 32);
    CHECK(small.height == 32);
    CHECK(small == ImageU8(32, 32, 128));
    CHECK(bicubic_resize(small, 256, 256) == gray);
  }
  SUBCASE("x8 reduction shape") {
    const auto lr = bicubic_resize(crop(natural(), 100, 100, 256, 256), 32, 32);
    CHECK(lr.width * 8 == 256);
    CHECK(lr.height * 8 == 256);
  }
  SUBCASE("16x16 to 4x4 matches direct summation") {
    const auto src = oracle::random_image(16, 16, 42);
    const auto fast = bicubic_resize(src, 4, 4);
    const auto slow = oracle::direct_bicubic(src, 4, 4);
    CHECK(max_abs_diff(fast, slow) <= 1);
  }
  SUBCASE("kernel values") {
    CHECK(cubic_kernel(0.0) == 1.0);
    CHECK(cubic_kernel(1.0) == 0.0);
    CHECK(cubic_kernel(2.0) == 0.0);
    CHECK(cubic_kernel(0.5) == doctest::Approx(oracle::keys(0.5)));
    CHECK(cubic_kernel(-1.5) == doctest::Approx(oracle::keys(1.5)));
  }
  SUBCASE("zero target dimension is rejected") {
    CHECK_THROWS_AS(bicubic_resize(ImageU8(4, 4), 0, 4), InvalidArgument);
    CHECK_THROWS_AS(bicubic_resize(ImageU8(4, 4), 4, 0), InvalidArgument);
  }
}

TEST_CASE("property: resampler agrees with the direct oracle on random sizes") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int trial = 0; trial < 12; ++trial) {
    const auto src = oracle::random_image(dim(rng), dim(rng), rng());
    const int dw = dim(rng), dh = dim(rng);
    CAPTURE(src.width);
    CAPTURE(src.height);
    CAPTURE(dw);
    CAPTURE(dh);
    CHECK(max_abs_diff(bicubic_resize(src, dw, dh), oracle::direct_bicubic(src, dw, dh)) <= 1);
  }
}

TEST_CASE("budgeted jpeg") {
  SUBCASE("flat image keeps top quality") {
    const auto p = encode_budget_jpeg(ImageU8(32, 32, 77), 1024);
    CHECK(p.bytes.size() <= 1024);
    CHECK(p.quality == kMaxJpegQuality);
    CHECK(p.source_width == 32);
  }
  SUBCASE("natural 32x32 crop fits a 1 kB budget") {
    const auto p = encode_budget_jpeg(crop(natural(), 200, 180, 32, 32), 1024);
    CHECK(p.bytes.size() <= 1024);
    CHECK(p.quality >= kMinJpegQuality);
  }
  SUBCASE("64 bytes is infeasible for a 256x256 image") {
    const auto img = crop(natural(), 0, 0, 256, 256);
    const auto smallest = encode_jpeg(img, 1).size();
    REQUIRE(smallest > 64);
    try {
      (void)encode_budget_jpeg(img, 64);
      FAIL("expected BudgetInfeasible");
    } catch (const BudgetInfeasible& e) {
      CHECK(e.smallest_size() == smallest);
      CHECK(e.budget() == 64);
    }
  }
  SUBCASE("binary search matches a linear scan") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 8; ++trial) {
      const auto img = crop(natural(), int(rng() % 480), int(rng() % 480), 32, 32);
      const std::size_t budget = 800 + rng() % 900;
      int best = 0;
      for (int q = kMinJpegQuality; q <= kMaxJpegQuality; ++q)
        if (encode_jpeg(img, q).size() <= budget) best = q;
      REQUIRE(best > 0);
      CHECK(encode_budget_jpeg(img, budget).quality == best);
    }
  }
  SUBCASE("zero budget is an argument error") {
    CHECK_THROWS_AS(encode_budget_jpeg(ImageU8(8, 8), 0), InvalidArgument);
  }
}

TEST_CASE("property: budget is never exceeded") {
  std::mt19937_64 rng(11);
  int successes = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 8 + int(rng() % 57), h = 8 + int(rng() % 57);
    const auto img = trial % 2 ? oracle::random_image(w, h, rng())
                               : crop(natural(), int(rng() % (512 - w)), int(rng() % (512 - h)), w, h);
    const std::size_t budget = 128 + rng() % 3000;
    try {
      const auto p = encode_budget_jpeg(img, budget);
      CHECK(p.bytes.size() <= budget);
      ++successes;
    } catch (const BudgetInfeasible& e) {
      CHECK(e.smallest_size() > budget);
    }
  }
  CHECK(successes > 0);
}

TEST_CASE("jpeg decode") {
  const auto img = crop(natural(), 50, 60, 48, 40);
  SUBCASE("dimension preserving") {
    const auto p = encode_budget_jpeg(img, 1'000'000);
    const auto back = decode_jpeg(p);
    CHECK(back.width == 48);
    CHECK(back.height == 40);
  }
  SUBCASE("truncated stream is a decode error") {
    auto p = encode_budget_jpeg(img, 1'000'000);
    p.bytes.resize(p.bytes.size() / 2);
    CHECK_THROWS_AS(decode_jpeg(p), DecodeError);
  }
  SUBCASE("garbage is a decode error") {
    std::vector<std::uint8_t> junk{0x00, 0x11, 0x22, 0x33, 0x44};
    CHECK_THROWS_AS(decode_jpeg(std::span<const std::uint8_t>(junk)), DecodeError);
  }
  SUBCASE("flat gray survives quality 95 within 2 levels") {
    const ImageU8 gray(32, 32, 128);
    const auto back = decode_jpeg(std::span<const std::uint8_t>(encode_jpeg(gray, 95)));
    CHECK(max_abs_diff(back, gray) <= 2);
  }
}

TEST_CASE("psnr") {
  const auto a = oracle::random_image(8, 8, 100);
  const auto b = oracle::random_image(8, 8, 200);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(ImageU8(4, 4, 0), ImageU8(4, 4, 255)) == 0.0);
  CHECK(psnr(a, b) == doctest::Approx(oracle::psnr(a, b)).epsilon(1e-9));
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, ImageU8(8, 9)), InvalidArgument);
}

TEST_CASE("png round trip and probing") {
  const auto dir = std::filesystem::temp_directory_path() / "abyss_imaging_test";
  std::filesystem::create_directories(dir);
  const auto img = oracle::random_image(13, 7, 5);
  write_png(dir / "x.png", img);
  CHECK(load_image(dir / "x.png") == img);
  const auto dims = probe_image(dir / "x.png");
  REQUIRE(dims);
  CHECK(dims->first == 13);
  CHECK(dims->second == 7);

  const auto jpg = encode_jpeg(img, 90);
  write_file(dir / "x.jpg", jpg);
  CHECK(probe_image(dir / "x.jpg") == std::pair{13, 7});
  CHECK(load_image(dir / "x.jpg").width == 13);

  write_file(dir / "bad.png", std::vector<std::uint8_t>{1, 2, 3});
  CHECK_FALSE(probe_image(dir / "bad.png"));
  CHECK_THROWS_AS(load_image(dir / "bad.png"), DecodeError);
  std::filesystem::remove_all(dir);
}
