// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abyss/channel.hpp"
#include "abyss/imaging/image_io.hpp"
#include "abyss/imaging/jpeg.hpp"
#include "abyss/imaging/psnr.hpp"
#include "abyss/imaging/resize.hpp"
#include "abyss/train/evaluate.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace abyss;
using imaging::ImageU8;

namespace {

const fs::path kData = ABYSS_TEST_DATA;
const char* kImages[] = {"astronaut", "coffee", "chelsea", "rocket"};

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string num(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < limit_s, "runtime " + num(secs, 4) + " s exceeds " + num(limit_s) + " s");
  if (!o.ok) ++failures;
  std::printf("%s  %-28s %8.2fs  %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::vector<ImageU8> natural_images() {
  std::vector<ImageU8> out;
  for (const char* n : kImages) out.push_back(imaging::read_png(kData / (std::string(n) + ".png")));
  return out;
}

// ---- overfit / GAN smoke shared setup ----------------------------------------

constexpr int kSmokeSteps = 500;
constexpr int kGanSteps = 200;
constexpr int kEquivalenceSteps = 100;
constexpr int kSmokeBase = 16;
constexpr int kSmokeGrowth = 8;
constexpr double kSmokeLr = 5e-3;
constexpr int kSmokeBatch = 8;

train::TrainConfig smoke_config() {
  train::TrainConfig c;
  c.generator.n_rrdb = 1;
  c.generator.base_channels = kSmokeBase;
  c.generator.growth_channels = kSmokeGrowth;
  c.discriminator.channel_schedule = {8, 16, 32, 64};
  c.learning_rate = kSmokeLr;
  c.batch_size = kSmokeBatch;
  c.seed = 5;
  return c;
}

train::InMemoryPairs smoke_pairs() {
  std::vector<dataset::PatchPair> pairs;
  const auto imgs = natural_images();
  for (std::size_t i = 0; i < 8; ++i)
    pairs.push_back(dataset::make_pair(imgs[i % imgs.size()], dataset::record_crop_seed(1, i), true, 1024));
  return train::InMemoryPairs(std::move(pairs));
}

std::optional<train::Checkpoint> g_smoke_checkpoint;

}  // namespace

int main() {
  std::printf("abyss acceptance suite\n");

  criterion("codec budget guarantee", 10.0, [](Outcome& o) {
    const auto imgs = natural_images();
    std::mt19937_64 rng(2024);
    int ok = 0, over = 0;
    std::size_t largest = 0;
    for (int i = 0; i < 100; ++i) {
      const auto& img = imgs[static_cast<std::size_t>(i) % imgs.size()];
      const int x = static_cast<int>(rng() % static_cast<std::uint64_t>(img.width - 32));
      const int y = static_cast<int>(rng() % static_cast<std::uint64_t>(img.height - 32));
      try {
        const auto p = imaging::encode_budget_jpeg(imaging::crop(img, x, y, 32, 32), 1024);
        largest = std::max(largest, p.bytes.size());
        if (p.bytes.size() > 1024) ++over;
        ++ok;
      } catch (const BudgetInfeasible&) {
      }
    }
    o.require(ok >= 95, "only " + std::to_string(ok) + "/100 crops fit");
    o.require(over == 0, std::to_string(over) + " payloads over budget");
    o.note(std::to_string(ok) + "/100 fit, largest payload " + std::to_string(largest) + " B");
  });

  criterion("resampler oracle", 30.0, [](Outcome& o) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> dim(1, 64);
    int worst = 0, ups = 0, downs = 0;
    for (int i = 0; i < 20; ++i) {
      const auto src = oracle::random_image(dim(rng), dim(rng), rng());
      // alternate between enlarging and reducing both axes
      const bool up = i % 2 == 0;
      const int dw = up ? std::min(64, src.width + 1 + static_cast<int>(rng() % 40)) : std::max(1, src.width / 2);
      const int dh = up ? std::min(64, src.height + 1 + static_cast<int>(rng() % 40)) : std::max(1, src.height / 2);
      const auto fast = imaging::bicubic_resize(src, dw, dh);
      const auto slow = oracle::direct_bicubic(src, dw, dh);
      for (std::size_t k = 0; k < fast.data.size(); ++k)
        worst = std::max(worst, std::abs(int(fast.data[k]) - int(slow.data[k])));
      (up ? ups : downs)++;
    }
    o.require(worst <= 1, "max deviation " + std::to_string(worst) + " levels");
    o.note("20 images (" + std::to_string(ups) + " up, " + std::to_string(downs) + " down), max deviation " +
           std::to_string(worst));
  });

  criterion("psnr arithmetic", 1.0, [](Outcome& o) {
    const auto a = oracle::random_image(8, 8, 1);
    const auto b = oracle::random_image(8, 8, 2);
    o.require(imaging::psnr(a, a) == 100.0, "identical != 100 dB");
    o.require(imaging::psnr(ImageU8(8, 8, 0), ImageU8(8, 8, 255)) == 0.0, "0 vs 255 != 0 dB");
    const double rel = std::abs(imaging::psnr(a, b) - oracle::psnr(a, b)) / oracle::psnr(a, b);
    o.require(rel <= 1e-9, "random 8x8 relative error " + num(rel));
    o.note("random 8x8 relative error " + num(rel, 3));
  });

  criterion("loss closed forms", 1.0, [](Outcome& o) {
    using namespace losses;
    for (double c : {0.0, 0.5, -2.0, 13.25}) {
      nn::Tensor<double> m(2, 1, 6, 6);
      m.vec().setConstant(c);
      const auto s = make_scores(m, m);
      o.require(gan_loss_d(s) == 2.0 && gan_loss_g(s) == 2.0, "constant map " + num(c) + " not exactly 2");
    }
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    double shift_err = 0.0;
    for (int t = 0; t < 20; ++t) {
      nn::Tensor<double> r(2, 1, 5, 5), f(2, 1, 5, 5);
      for (Eigen::Index i = 0; i < r.vec().size(); ++i) {
        r.vec()[i] = nd(rng);
        f.vec()[i] = nd(rng);
      }
      o.require(gan_loss_g(make_scores(f, r)) == gan_loss_d(make_scores(r, f)), "label-swap duality broken");
      const double c = 10.0 * nd(rng);
      nn::Tensor<double> rs = r, fsh = f;
      rs.vec().array() += c;
      fsh.vec().array() += c;
      shift_err = std::max({shift_err, std::abs(gan_loss_d(make_scores(rs, fsh)) - gan_loss_d(make_scores(r, f))),
                            std::abs(gan_loss_g(make_scores(rs, fsh)) - gan_loss_g(make_scores(r, f)))});
    }
    o.require(shift_err <= 1e-6, "shift invariance error " + num(shift_err));
    o.note("shift error " + num(shift_err, 3));
  });

  criterion("gradient check", 120.0, [](Outcome& o) {
    using namespace gradcheck;
    gradcheck::Rig<double> rd;
    gradcheck::Rig<float> rf;
    for (auto l : {Loss::L1, Loss::GanD, Loss::GanG}) {
      const auto d = check(rd, l, 100, 17, 1e-6);
      const auto f = check(rf, l, 100, 18, 1e-6);
      o.require(d.worst <= 1e-4, std::string(name(l)) + " double " + num(d.worst, 3) + " at " + d.worst_name);
      o.require(f.worst <= 1e-2, std::string(name(l)) + " float " + num(f.worst, 3) + " at " + f.worst_name);
      o.note(std::string(name(l)) + " worst rel err f64 " + num(d.worst, 2) + " f32 " + num(f.worst, 2));
    }
  });

  criterion("shape contract", 30.0, [](Outcome& o) {
    auto g = nn::make_generator<float>(nn::GeneratorConfig{}, 0);
    nn::Tensor<float> x(1, 3, 32, 32);
    x.vec().setConstant(0.5f);
    o.require(g.forward(x).shape() == nn::Shape{1, 3, 256, 256}, "32x32 did not map to 256x256");
    nn::Tensor<float> y(1, 3, 40, 24);
    y.vec().setConstant(0.25f);
    o.require(g.forward(y).shape() == nn::Shape{1, 3, 320, 192}, "40x24 did not map to 320x192");
  });

  criterion("overfit smoke", 600.0, [](Outcome& o) {
    const auto pairs = smoke_pairs();
    auto cfg = smoke_config();
    cfg.max_steps = kSmokeSteps;
    std::vector<nn::WeightSet> psnr_traj;
    train::TrainHooks hooks;
    hooks.on_step = [&](long step, const nn::Generator<float>& g, const nn::Discriminator<float>*) {
      if (step <= kEquivalenceSteps) psnr_traj.push_back(g.weights());
    };
    const auto ckpt = train::train_psnr(cfg, pairs, nullptr, hooks);
    g_smoke_checkpoint = ckpt;
    const auto g = train::load_generator(ckpt);
    const auto rep = train::evaluate([&](const ImageU8& lr) { return train::super_resolve(g, lr); }, pairs);
    const double margin = rep.mean_psnr_model - rep.mean_psnr_bicubic;
    o.require(margin >= 1.0, "model beats bicubic by only " + num(margin, 4) + " dB");
    o.note("model " + num(rep.mean_psnr_model, 5) + " dB vs bicubic " + num(rep.mean_psnr_bicubic, 5) + " dB (+" +
           num(margin, 3) + ")");

    // lambda = 0 GAN stage from the same initialization
    auto init_cfg = smoke_config();
    const auto init = train::train_psnr(init_cfg, pairs);
    auto gcfg = smoke_config();
    gcfg.stage = train::Stage::Gan;
    gcfg.lambda = 0.0;
    gcfg.max_steps = kEquivalenceSteps;
    std::size_t mismatches = 0;
    long seen = 0;
    train::TrainHooks gh;
    gh.on_step = [&](long step, const nn::Generator<float>& gen, const nn::Discriminator<float>*) {
      ++seen;
      if (!(gen.weights() == psnr_traj[static_cast<std::size_t>(step - 1)])) ++mismatches;
    };
    train::train_gan(gcfg, init, pairs, nullptr, gh);
    o.require(seen == kEquivalenceSteps && mismatches == 0,
              std::to_string(mismatches) + " of " + std::to_string(seen) + " lambda=0 steps differ from the psnr stage");
    o.note("lambda=0 trajectory identical over " + std::to_string(seen) + " steps");
  });

  criterion("gan smoke stability", 600.0, [](Outcome& o) {
    if (!g_smoke_checkpoint) throw std::runtime_error("overfit smoke produced no checkpoint");
    const auto pairs = smoke_pairs();
    auto cfg = smoke_config();
    cfg.stage = train::Stage::Gan;
    cfg.max_steps = kGanSteps;
    cfg.learning_rate = train::TrainConfig{}.learning_rate;
    bool finite = true;
    double real_mean = 0.0, fake_mean = 0.0;
    train::TrainHooks hooks;
    hooks.on_log = [&](const train::LogEntry& e) {
      if (!std::isfinite(e.value)) finite = false;
      if (e.step == kGanSteps && e.loss == "real_score_mean") real_mean = e.value;
      if (e.step == kGanSteps && e.loss == "fake_score_mean") fake_mean = e.value;
    };
    const auto ckpt = train::train_gan(cfg, *g_smoke_checkpoint, pairs, nullptr, hooks);
    o.require(finite, "non-finite loss logged");
    o.require(ckpt.step == kGanSteps, "stopped at step " + std::to_string(ckpt.step));
    o.require(real_mean > fake_mean, "mean real score " + num(real_mean) + " <= fake " + num(fake_mean));
    o.note("final mean D score real " + num(real_mean, 4) + " vs fake " + num(fake_mean, 4));
  });

  criterion("bandwidth feasibility", 1.0, [](Outcome& o) {
    channel::LinkConfig l;
    l.per_packet_overhead = 0;
    l.packet_size = 2048;
    l.rate_bps = 50'000;
    const double f50 = channel::max_fps(l, 1024);
    l.rate_bps = 30'000;
    const double f30 = channel::max_fps(l, 1024);
    o.require(std::abs(f50 - 6.10) <= 0.01, "50 kbit/s gives " + num(f50));
    o.require(std::abs(f30 - 3.66) <= 0.01, "30 kbit/s gives " + num(f30));
    l.rate_bps = 50'000;
    const auto t = channel::transmit(std::vector<std::uint8_t>(1024, 7), l);
    o.require(t.report.total_time_s == 0.16384, "total_time " + num(t.report.total_time_s, 17));
    o.note("6.10 -> " + num(f50, 4) + ", 3.66 -> " + num(f30, 4) + ", total " + num(t.report.total_time_s, 10) + " s");
  });

  criterion("split hygiene", 10.0, [](Outcome& o) {
    std::mt19937_64 rng(4242);
    int clean = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<dataset::FrameRecord> rs;
      const int sessions = 2 + static_cast<int>(rng() % 20);
      for (int s = 0; s < sessions; ++s) {
        const int frames = 1 + static_cast<int>(rng() % 200);
        for (int f = 0; f < frames; ++f) rs.push_back({"trawl" + std::to_string(s), "clip.mp4", f});
      }
      std::shuffle(rs.begin(), rs.end(), rng);
      const auto m = dataset::split_by_session(rs, 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0, rng());
      std::set<std::string> train_sessions;
      for (const auto& r : m.train) train_sessions.insert(r.session_id);
      bool disjoint = true;
      for (const auto& r : m.test) disjoint = disjoint && train_sessions.count(r.session_id) == 0;
      if (disjoint && m.train.size() + m.test.size() == rs.size()) ++clean;
    }
    o.require(clean == 100, std::to_string(clean) + "/100 manifests session-disjoint");
    o.note(std::to_string(clean) + "/100 manifests disjoint");
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
