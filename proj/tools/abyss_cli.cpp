// abyss: command line front end for the super-resolution pipeline.
//
// Exit codes: 0 success, 1 operational failure, 2 usage error.

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abyss/channel.hpp"
#include "abyss/dataset.hpp"
#include "abyss/imaging/image_io.hpp"
#include "abyss/imaging/jpeg.hpp"
#include "abyss/imaging/psnr.hpp"
#include "abyss/imaging/resize.hpp"
#include "abyss/train/evaluate.hpp"

namespace fs = std::filesystem;
using namespace abyss;
using imaging::ImageU8;

namespace {

constexpr int kTile = dataset::kHrSize;
// Blank border between and around grid tiles, in pixels.
constexpr int kGutter = 4;

struct Report {
  std::vector<std::pair<std::string, std::string>> rows;

  template <typename T>
  void add(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(10);
    os << value;
    rows.emplace_back(key, os.str());
  }
  void add_text(const std::string& kv_lines) {
    std::istringstream is(kv_lines);
    std::string line;
    while (std::getline(is, line)) {
      const auto tab = line.find('\t');
      if (tab != std::string::npos) rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  std::string text() const {
    std::string out;
    for (const auto& [k, v] : rows) out += k + '\t' + v + '\n';
    return out;
  }
  void save(const std::string& path) const {
    if (path.empty()) return;
    std::ofstream os(path, std::ios::binary);
    os << text();
    if (!os) throw IoError("cannot write report " + path);
  }
};

struct LinkFlags {
  channel::LinkConfig link;

  void attach(CLI::App* app) {
    app->add_option("--rate", link.rate_bps, "Link rate in bit/s")->capture_default_str();
    app->add_option("--loss", link.packet_loss_prob, "Packet loss probability [0,1)")->capture_default_str();
    app->add_option("--latency", link.latency_s, "One-way latency in seconds")->capture_default_str();
    app->add_option("--packet-size", link.packet_size, "Packet size in bytes, header included")->capture_default_str();
    app->add_option("--overhead", link.per_packet_overhead, "Per-packet header bytes")->capture_default_str();
    app->add_option("--seed", link.seed, "Loss process seed")->capture_default_str();
  }
};

struct ModelFlags {
  nn::GeneratorConfig g;
  std::vector<int> d_channels = nn::DiscriminatorConfig{}.channel_schedule;

  void attach(CLI::App* app) {
    app->add_option("--n-rrdb", g.n_rrdb, "Residual-in-residual dense blocks")->capture_default_str();
    app->add_option("--base-channels", g.base_channels, "Trunk feature channels")->capture_default_str();
    app->add_option("--growth-channels", g.growth_channels, "Dense block growth channels")->capture_default_str();
    app->add_option("--scale", g.scale, "Up-sampling factor (power of two)")->capture_default_str();
  }
  void attach_discriminator(CLI::App* app) {
    app->add_option("--d-channels", d_channels, "Discriminator channel schedule")->delimiter(',')->capture_default_str();
  }
};

ImageU8 center_crop(const ImageU8& img) {
  if (img.width < kTile || img.height < kTile)
    throw InvalidArgument("image must be at least 256x256, got " + std::to_string(img.width) + "x" +
                          std::to_string(img.height));
  return imaging::crop(img, (img.width - kTile) / 2, (img.height - kTile) / 2, kTile, kTile);
}

void require_x8(const nn::Generator<float>& g) {
  if (g.config().scale != kTile / dataset::kLrSize)
    throw ConfigError("checkpoint generator scale " + std::to_string(g.config().scale) + " does not map 32x32 to 256x256");
}

// ---- prepare ----------------------------------------------------------------

struct PrepareArgs {
  std::string corpus;
  long stride = 1;
  double ratio = 0.8;
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
};

int run_prepare(const PrepareArgs& a) {
  std::string root = a.corpus;
  if (root.empty()) {
    const char* env = std::getenv("ABYSS_DATA_DIR");
    if (env == nullptr || *env == '\0') throw InvalidArgument("no corpus given and ABYSS_DATA_DIR is unset");
    root = env;
  }
  const auto sample = dataset::sample_frames(root, a.stride);
  for (const auto& w : sample.warnings) std::cerr << "warning: " << w << '\n';
  const auto m = dataset::split_by_session(sample.records, a.ratio, a.seed);
  dataset::save_manifest(a.out, m);

  std::set<std::string> train_sessions, test_sessions;
  for (const auto& r : m.train) train_sessions.insert(r.session_id);
  for (const auto& r : m.test) test_sessions.insert(r.session_id);
  Report rep;
  rep.add("manifest", a.out);
  rep.add("train_frames", m.train.size());
  rep.add("test_frames", m.test.size());
  rep.add("train_sessions", train_sessions.size());
  rep.add("test_sessions", test_sessions.size());
  rep.add("warnings", sample.warnings.size());
  std::cout << rep.text();
  rep.save(a.report);
  return 0;
}

// ---- sendrecv ---------------------------------------------------------------

struct SendRecvArgs {
  std::string image;
  std::size_t budget = dataset::kDefaultBudget;
  LinkFlags link;
  std::string ckpt;
  std::string out_dir = ".";
  std::string report;
};

int run_sendrecv(const SendRecvArgs& a) {
  const auto ref = center_crop(imaging::load_image(a.image));
  const auto g = train::load_generator(train::load_checkpoint(a.ckpt));
  require_x8(g);

  const auto lr = imaging::bicubic_resize(ref, dataset::kLrSize, dataset::kLrSize);
  const auto payload = imaging::encode_budget_jpeg(lr, a.budget);
  const auto sent = channel::transmit(payload.bytes, a.link.link);
  const auto received = imaging::decode_jpeg(sent.bytes);
  const auto sr = train::super_resolve(g, received);
  const auto bicubic = imaging::bicubic_resize(received, kTile, kTile);

  fs::create_directories(a.out_dir);
  imaging::write_file(fs::path(a.out_dir) / "lr.jpg", payload.bytes);
  imaging::write_png(fs::path(a.out_dir) / "sr.png", sr);

  Report rep;
  rep.add("jpeg_quality", payload.quality);
  rep.add("budget", a.budget);
  rep.add_text(sent.report.to_text());
  rep.add("psnr_model", imaging::psnr(sr, ref));
  rep.add("psnr_bicubic", imaging::psnr(bicubic, ref));
  std::ofstream(fs::path(a.out_dir) / "report.txt") << rep.text();
  std::cout << rep.text();
  rep.save(a.report);
  return 0;
}

// ---- compare ----------------------------------------------------------------

struct CropBox {
  int x = 0, y = 0, w = 0, h = 0;
};

CropBox parse_crop(const std::string& s) {
  CropBox c;
  char sep[3];
  std::istringstream is(s);
  if (!(is >> c.x >> sep[0] >> c.y >> sep[1] >> c.w >> sep[2] >> c.h) || sep[0] != ',' || sep[1] != ',' ||
      sep[2] != ',' || !is.eof())
    throw CLI::ValidationError("--crop", "expected x,y,w,h, got '" + s + "'");
  if (c.w < 1 || c.h < 1 || c.x < 0 || c.y < 0 || c.x + c.w > kTile || c.y + c.h > kTile)
    throw CLI::ValidationError("--crop", "box '" + s + "' must lie inside the 256x256 tile");
  return c;
}

// Nearest-neighbour enlargement keeps the reconstructed pixels visible.
ImageU8 zoom(const ImageU8& tile, const CropBox& c) {
  ImageU8 out(kTile, kTile);
  for (int y = 0; y < kTile; ++y)
    for (int x = 0; x < kTile; ++x)
      for (int ch = 0; ch < 3; ++ch)
        out.at(x, y, ch) = tile.at(c.x + x * c.w / kTile, c.y + y * c.h / kTile, ch);
  return out;
}

struct CompareArgs {
  std::vector<std::string> images;
  std::string ckpt;
  std::vector<std::string> crops;
  std::string out = "compare.png";
  std::size_t budget = dataset::kDefaultBudget;
  bool no_degrade = false;
  std::string report;
};

int run_compare(const CompareArgs& a) {
  std::vector<CropBox> boxes;
  for (const auto& s : a.crops) boxes.push_back(parse_crop(s));
  const auto g = train::load_generator(train::load_checkpoint(a.ckpt));
  require_x8(g);

  // one row per image plus one zoom row per crop box
  std::vector<std::array<ImageU8, 3>> rows;
  Report rep;
  for (const auto& path : a.images) {
    const auto hr = center_crop(imaging::load_image(path));
    auto lr = imaging::bicubic_resize(hr, dataset::kLrSize, dataset::kLrSize);
    if (!a.no_degrade) lr = imaging::decode_jpeg(imaging::encode_budget_jpeg(lr, a.budget));
    const auto bicubic = imaging::bicubic_resize(lr, kTile, kTile);
    const auto sr = train::super_resolve(g, lr);
    rep.add("psnr_bicubic\t" + path, imaging::psnr(bicubic, hr));
    rep.add("psnr_model\t" + path, imaging::psnr(sr, hr));
    rows.push_back({hr, bicubic, sr});
    for (const auto& b : boxes) rows.push_back({zoom(hr, b), zoom(bicubic, b), zoom(sr, b)});
  }

  const int cols = 3;
  const int width = cols * kTile + (cols + 1) * kGutter;
  const int height = static_cast<int>(rows.size()) * kTile + (static_cast<int>(rows.size()) + 1) * kGutter;
  ImageU8 grid(width, height, 255);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < cols; ++c) {
      const int ox = kGutter + c * (kTile + kGutter);
      const int oy = kGutter + static_cast<int>(r) * (kTile + kGutter);
      const auto& tile = rows[r][static_cast<std::size_t>(c)];
      for (int y = 0; y < kTile; ++y)
        std::copy_n(tile.data.begin() + static_cast<std::ptrdiff_t>(tile.index(0, y, 0)), kTile * 3,
                    grid.data.begin() + static_cast<std::ptrdiff_t>(grid.index(ox, oy + y, 0)));
    }
  imaging::write_png(a.out, grid);
  rep.add("grid", a.out);
  rep.add("grid_width", width);
  rep.add("grid_height", height);
  std::cout << rep.text();
  rep.save(a.report);
  return 0;
}

// ---- training ---------------------------------------------------------------

struct TrainArgs {
  train::TrainConfig cfg;
  ModelFlags model;
  std::string manifest;
  std::string out;
  std::string init;
  std::string resume;
  std::string checkpoint_dir;
  std::string log;
  bool no_degrade = false;
  std::string report;
};

void attach_train(CLI::App* app, TrainArgs& a, bool gan) {
  auto& c = a.cfg;
  app->add_option("--manifest", a.manifest, "Split manifest from `prepare`")->required();
  app->add_option("--out", a.out, "Final checkpoint path")->required();
  app->add_option("--max-steps", c.max_steps, "Optimizer steps")->required();
  app->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--beta1", c.adam_beta1, "Adam beta1")->capture_default_str();
  app->add_option("--beta2", c.adam_beta2, "Adam beta2")->capture_default_str();
  app->add_option("--batch", c.batch_size, "Mini-batch size")->capture_default_str();
  app->add_option("--seed", c.seed, "Initialization and data-order seed")->capture_default_str();
  app->add_option("--budget", c.budget, "JPEG byte budget for degraded LR inputs")->capture_default_str();
  app->add_flag("--no-degrade", a.no_degrade, "Train on clean bicubic LR inputs");
  app->add_option("--checkpoint-every", c.checkpoint_every, "Periodic checkpoint interval (0 = off)")->capture_default_str();
  app->add_option("--checkpoint-dir", a.checkpoint_dir, "Directory for periodic and diagnostic checkpoints");
  app->add_option("--log", a.log, "Append step<TAB>stage<TAB>loss<TAB>value lines here");
  app->add_option("--resume", a.resume, "Continue from a checkpoint of this stage");
  app->add_option("--report", a.report, "Write a key<TAB>value report");
  if (gan) {
    app->add_option("--init", a.init, "PSNR-stage checkpoint used as the generator initialization")->required();
    app->add_option("--lambda", c.lambda, "Adversarial weight")->capture_default_str();
    a.model.attach_discriminator(app);
  } else {
    a.model.attach(app);
  }
}

int run_train(TrainArgs& a, bool gan) {
  auto cfg = a.cfg;
  cfg.stage = gan ? train::Stage::Gan : train::Stage::Psnr;
  cfg.degrade = !a.no_degrade;
  cfg.checkpoint_dir = a.checkpoint_dir;
  cfg.log_path = a.log;
  const auto manifest = dataset::load_manifest(a.manifest);
  train::ManifestPairs data(manifest.train, cfg.seed, cfg.degrade, cfg.budget);

  std::optional<train::Checkpoint> resume;
  if (!a.resume.empty()) resume = train::load_checkpoint(a.resume);

  train::TrainHooks hooks;
  hooks.on_log = [](const train::LogEntry& e) {
    if (e.loss == "l1" && (e.step % 50 == 0 || e.step == 1))
      std::cerr << "step " << e.step << " l1 " << e.value << '\n';
  };

  train::Checkpoint out;
  if (gan) {
    cfg.init_checkpoint = a.init;
    const auto init = train::load_checkpoint(a.init);
    cfg.generator = init.generator_config;
    cfg.discriminator.channel_schedule = a.model.d_channels;
    out = train::train_gan(cfg, init, data, resume ? &*resume : nullptr, hooks);
  } else {
    cfg.generator = a.model.g;
    out = train::train_psnr(cfg, data, resume ? &*resume : nullptr, hooks);
  }
  train::save_checkpoint(a.out, out);

  Report rep;
  rep.add("checkpoint", a.out);
  rep.add("stage", train::to_string(out.stage));
  rep.add("step", out.step);
  rep.add("train_frames", manifest.train.size());
  std::cout << rep.text();
  rep.save(a.report);
  return 0;
}

// ---- evaluate / encode / transmit-sim ---------------------------------------

struct EvalArgs {
  std::string ckpt;
  std::string manifest;
  std::size_t budget = dataset::kDefaultBudget;
  bool no_degrade = false;
  std::string report;
};

int run_evaluate(const EvalArgs& a) {
  const auto rep = train::evaluate(train::load_checkpoint(a.ckpt), dataset::load_manifest(a.manifest), !a.no_degrade,
                                   a.budget);
  std::cout << "images\t" << rep.count << "\nmean_psnr_model\t" << rep.mean_psnr_model << "\nmean_psnr_bicubic\t"
            << rep.mean_psnr_bicubic << '\n';
  if (!a.report.empty()) {
    std::ofstream os(a.report);
    os << rep.to_text();
    if (!os) throw IoError("cannot write report " + a.report);
  }
  return 0;
}

struct EncodeArgs {
  std::string input;
  std::string out;
  std::size_t budget = dataset::kDefaultBudget;
  bool reduce = false;
  std::string report;
};

int run_encode(const EncodeArgs& a) {
  auto img = imaging::load_image(a.input);
  if (a.reduce) img = imaging::bicubic_resize(center_crop(img), dataset::kLrSize, dataset::kLrSize);
  const auto p = imaging::encode_budget_jpeg(img, a.budget);
  imaging::write_file(a.out, p.bytes);
  Report rep;
  rep.add("output", a.out);
  rep.add("width", p.source_width);
  rep.add("height", p.source_height);
  rep.add("quality", p.quality);
  rep.add("bytes", p.bytes.size());
  rep.add("budget", p.budget);
  std::cout << rep.text();
  rep.save(a.report);
  return 0;
}

struct TransmitArgs {
  std::string input;
  std::size_t bytes = 0;
  LinkFlags link;
  std::string report;
};

int run_transmit(const TransmitArgs& a) {
  std::vector<std::uint8_t> payload;
  if (!a.input.empty())
    payload = imaging::read_file(a.input);
  else
    payload.assign(a.bytes, 0);
  const auto t = channel::transmit(payload, a.link.link);
  if (t.bytes != payload) throw NumericError("channel returned altered bytes");
  Report rep;
  rep.add_text(t.report.to_text());
  rep.add("max_fps", channel::max_fps(a.link.link, payload.size()));
  std::cout << rep.text();
  rep.save(a.report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abyss: x8 image super-resolution for ultra-low-bandwidth links"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "Sample frames and write a session-disjoint split manifest");
  c_prep->add_option("--corpus", prep.corpus, "Corpus root, one directory per session (default: $ABYSS_DATA_DIR)");
  c_prep->add_option("--stride", prep.stride, "Record every stride-th frame")->capture_default_str();
  c_prep->add_option("--ratio", prep.ratio, "Train fraction of frames")->capture_default_str();
  c_prep->add_option("--seed", prep.seed, "Session shuffle seed")->capture_default_str();
  c_prep->add_option("--out", prep.out, "Manifest path")->required();
  c_prep->add_option("--report", prep.report, "Write a key<TAB>value report");

  SendRecvArgs sr;
  auto* c_sr = app.add_subcommand("sendrecv", "Downsample, encode, transmit, decode and super-resolve one image");
  c_sr->add_option("image", sr.image, "Input image, at least 256x256 (center crop is used)")->required();
  c_sr->add_option("--ckpt", sr.ckpt, "Generator checkpoint")->required();
  c_sr->add_option("--budget", sr.budget, "JPEG byte budget")->capture_default_str();
  c_sr->add_option("--out-dir", sr.out_dir, "Where lr.jpg, sr.png and report.txt go")->capture_default_str();
  c_sr->add_option("--report", sr.report, "Write a key<TAB>value report");
  sr.link.attach(c_sr);

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Write an HR | bicubic | model comparison grid");
  c_cmp->add_option("images", cmp.images, "Input images, at least 256x256")->required();
  c_cmp->add_option("--ckpt", cmp.ckpt, "Generator checkpoint")->required();
  c_cmp->add_option("--crop", cmp.crops, "Zoom box x,y,w,h inside the 256x256 tile (repeatable)");
  c_cmp->add_option("--out", cmp.out, "Output PNG")->capture_default_str();
  c_cmp->add_option("--budget", cmp.budget, "JPEG byte budget for the LR input")->capture_default_str();
  c_cmp->add_flag("--no-degrade", cmp.no_degrade, "Feed the clean bicubic LR image");
  c_cmp->add_option("--report", cmp.report, "Write a key<TAB>value report");

  TrainArgs tp, tg;
  auto* c_tp = app.add_subcommand("train-psnr", "Stage one: generator under the pixel L1 loss");
  attach_train(c_tp, tp, false);
  auto* c_tg = app.add_subcommand("train-gan", "Stage two: adversarial fine-tuning from a stage-one checkpoint");
  attach_train(c_tg, tg, true);

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Mean PSNR of model and bicubic on the test split");
  c_ev->add_option("--ckpt", ev.ckpt, "Generator checkpoint")->required();
  c_ev->add_option("--manifest", ev.manifest, "Split manifest")->required();
  c_ev->add_option("--budget", ev.budget, "JPEG byte budget")->capture_default_str();
  c_ev->add_flag("--no-degrade", ev.no_degrade, "Evaluate on clean bicubic LR inputs");
  c_ev->add_option("--report", ev.report, "Write per-image rows and means");

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Encode an image as JPEG within a byte budget");
  c_enc->add_option("input", enc.input, "Input image")->required();
  c_enc->add_option("--out", enc.out, "Output JPEG")->required();
  c_enc->add_option("--budget", enc.budget, "Byte budget")->capture_default_str();
  c_enc->add_flag("--reduce", enc.reduce, "Center-crop 256x256 and reduce to 32x32 first");
  c_enc->add_option("--report", enc.report, "Write a key<TAB>value report");

  TransmitArgs tx;
  auto* c_tx = app.add_subcommand("transmit-sim", "Simulate delivery of a payload over the acoustic link");
  auto* in_opt = c_tx->add_option("input", tx.input, "Payload file");
  auto* bytes_opt = c_tx->add_option("--bytes", tx.bytes, "Synthetic payload size instead of a file");
  in_opt->excludes(bytes_opt);
  c_tx->add_option("--report", tx.report, "Write a key<TAB>value report");
  tx.link.attach(c_tx);
  c_tx->callback([&] {
    if (tx.input.empty() && tx.bytes == 0) throw CLI::RequiredError("input file or --bytes");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_prep->parsed()) return run_prepare(prep);
    if (c_sr->parsed()) return run_sendrecv(sr);
    if (c_cmp->parsed()) return run_compare(cmp);
    if (c_tp->parsed()) return run_train(tp, false);
    if (c_tg->parsed()) return run_train(tg, true);
    if (c_ev->parsed()) return run_evaluate(ev);
    if (c_enc->parsed()) return run_encode(enc);
    if (c_tx->parsed()) return run_transmit(tx);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
