#include "abyss/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "abyss/losses.hpp"
#include "abyss/nn/convert.hpp"

namespace abyss::train {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

class Logger {
 public:
  Logger(const TrainConfig& cfg, const TrainHooks& hooks) : hooks_(hooks) {
    if (!cfg.log_path.empty()) {
      file_.open(cfg.log_path, std::ios::app);
      if (!file_) throw IoError("cannot open training log " + cfg.log_path.string());
      file_.precision(9);
    }
  }

  void operator()(long step, Stage stage, const char* name, double value) {
    if (file_.is_open()) file_ << step << '\t' << to_string(stage) << '\t' << name << '\t' << value << '\n';
    if (hooks_.on_log) hooks_.on_log({step, stage, name, value});
  }

 private:
  const TrainHooks& hooks_;
  std::ofstream file_;
};

AdamParams adam_params(const TrainConfig& cfg) {
  return {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
}

std::filesystem::path checkpoint_path(const TrainConfig& cfg, const std::string& stem) {
  return cfg.checkpoint_dir / (stem + ".ckpt");
}

bool periodic_due(const TrainConfig& cfg, long step) {
  return cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() && step % cfg.checkpoint_every == 0;
}

void save_periodic(const TrainConfig& cfg, long step, const Checkpoint& c) {
  std::filesystem::create_directories(cfg.checkpoint_dir);
  save_checkpoint(checkpoint_path(cfg, to_string(c.stage) + "_step_" + std::to_string(step)), c);
}

[[noreturn]] void diverge(const TrainConfig& cfg, const Checkpoint& state, const std::string& what) {
  std::string msg = what + " at step " + std::to_string(state.step + 1);
  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    const auto p = checkpoint_path(cfg, "diverged_" + to_string(state.stage) + "_step_" + std::to_string(state.step));
    save_checkpoint(p, state);
    msg += "; diagnostic checkpoint written to " + p.string();
  }
  throw DivergenceError(msg, state);
}

struct Models {
  nn::Generator<float> g;
  Adam<float> g_opt;
  std::unique_ptr<nn::Discriminator<float>> d;
  Adam<float> d_opt;
  long step = 0;
};

Checkpoint snapshot_of(const TrainConfig& cfg, Stage stage, Models& m) {
  Checkpoint c;
  c.stage = stage;
  c.step = m.step;
  c.generator_config = m.g.config();
  c.generator = m.g.weights();
  auto gp = m.g.parameters();
  c.generator_optimizer = m.g_opt.state(gp);
  if (m.d) {
    c.discriminator_config = m.d->config();
    c.discriminator = m.d->weights();
    c.discriminator_optimizer = m.d_opt.state(m.d->parameters());
  }
  c.settings = cfg.snapshot();
  return c;
}

void check_data(const PairSource& data) {
  if (data.size() == 0) throw InvalidArgument("training split is empty");
}

}  // namespace

void TrainConfig::validate() const {
  generator.validate();
  discriminator.validate();
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
}

std::map<std::string, std::string> TrainConfig::snapshot() const {
  return {
      {"train.learning_rate", fmt(learning_rate)},
      {"train.adam_beta1", fmt(adam_beta1)},
      {"train.adam_beta2", fmt(adam_beta2)},
      {"train.adam_eps", fmt(adam_eps)},
      {"train.batch_size", std::to_string(batch_size)},
      {"train.lambda", fmt(lambda)},
      {"train.stage", to_string(stage)},
      {"train.max_steps", std::to_string(max_steps)},
      {"train.seed", std::to_string(seed)},
      {"train.degrade", degrade ? "true" : "false"},
      {"train.budget", std::to_string(budget)},
  };
}

dataset::PatchPair ManifestPairs::get(std::size_t i) const {
  const auto& r = records_.at(i);
  return dataset::make_pair(dataset::load_frame(r), dataset::record_crop_seed(seed_, i), degrade_, budget_);
}

std::string ManifestPairs::id(std::size_t i) const {
  const auto& r = records_.at(i);
  return r.session_id + "/" + std::filesystem::path(r.source_path).filename().string() + "#" +
         std::to_string(r.frame_index);
}

std::vector<std::size_t> batch_indices(std::uint64_t seed, long step, int batch_size, std::size_t dataset_size) {
  if (dataset_size == 0) throw InvalidArgument("batch_indices: empty dataset");
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  std::vector<std::size_t> perm;
  std::uint64_t perm_epoch = ~0ull;
  for (int b = 0; b < batch_size; ++b) {
    const std::uint64_t pos = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(batch_size) +
                              static_cast<std::uint64_t>(b);
    const std::uint64_t epoch = pos / dataset_size;
    if (epoch != perm_epoch) {
      perm.resize(dataset_size);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::mt19937_64 rng(dataset::record_crop_seed(seed, static_cast<std::size_t>(epoch)));
      std::shuffle(perm.begin(), perm.end(), rng);
      perm_epoch = epoch;
    }
    out.push_back(perm[static_cast<std::size_t>(pos % dataset_size)]);
  }
  return out;
}

Batch assemble_batch(const PairSource& data, const std::vector<std::size_t>& indices) {
  Batch batch;
  const int n = static_cast<int>(indices.size());
  for (int b = 0; b < n; ++b) {
    const auto pair = data.get(indices[static_cast<std::size_t>(b)]);
    if (b == 0) {
      batch.lr = nn::Tensor<float>(n, 3, pair.lr.height, pair.lr.width);
      batch.hr = nn::Tensor<float>(n, 3, pair.hr.height, pair.hr.width);
    }
    nn::store_image(pair.lr, batch.lr, b);
    nn::store_image(pair.hr, batch.hr, b);
  }
  return batch;
}

Checkpoint train_psnr(const TrainConfig& cfg, const PairSource& data, const Checkpoint* resume,
                      const TrainHooks& hooks) {
  if (cfg.stage != Stage::Psnr) throw ConfigError("train_psnr requires stage psnr");
  cfg.validate();
  check_data(data);

  Models m{nn::Generator<float>(cfg.generator), Adam<float>(adam_params(cfg)), nullptr, Adam<float>(adam_params(cfg))};
  if (resume != nullptr) {
    if (resume->stage != Stage::Psnr) throw ConfigError("cannot resume psnr training from a gan checkpoint");
    if (!(resume->generator_config == cfg.generator)) throw ConfigError("resume checkpoint generator config differs");
    m.g.load_weights(resume->generator);
    m.g_opt.load(resume->generator_optimizer, m.g.parameters());
    m.step = resume->step;
  } else {
    m.g.init_weights(cfg.seed);
  }

  Logger log(cfg, hooks);
  auto params = m.g.parameters();
  nn::Generator<float>::Trace trace;
  for (; m.step < cfg.max_steps;) {
    const auto batch = assemble_batch(data, batch_indices(cfg.seed, m.step, cfg.batch_size, data.size()));
    m.g.zero_grad();
    const auto out = m.g.forward(batch.lr, &trace);
    const double l1 = losses::l1_loss(out, batch.hr);
    if (!std::isfinite(l1)) diverge(cfg, snapshot_of(cfg, Stage::Psnr, m), "non-finite l1 loss");
    m.g.backward(trace, losses::l1_grad(out, batch.hr));
    m.g_opt.step(params);
    ++m.step;
    log(m.step, Stage::Psnr, "l1", l1);
    if (hooks.on_step) hooks.on_step(m.step, m.g, nullptr);
    if (periodic_due(cfg, m.step)) save_periodic(cfg, m.step, snapshot_of(cfg, Stage::Psnr, m));
  }
  return snapshot_of(cfg, Stage::Psnr, m);
}

Checkpoint train_psnr(const TrainConfig& cfg, const dataset::SplitManifest& manifest) {
  ManifestPairs data(manifest.train, cfg.seed, cfg.degrade, cfg.budget);
  return train_psnr(cfg, data);
}

Checkpoint train_gan(const TrainConfig& cfg, const Checkpoint& init, const PairSource& data, const Checkpoint* resume,
                     const TrainHooks& hooks) {
  if (cfg.stage != Stage::Gan) throw ConfigError("train_gan requires stage gan");
  cfg.validate();
  if (init.generator.empty()) throw ConfigError("gan stage needs an initialization checkpoint with generator weights");
  check_data(data);

  Models m{load_generator(init), Adam<float>(adam_params(cfg)),
           std::make_unique<nn::Discriminator<float>>(cfg.discriminator), Adam<float>(adam_params(cfg))};
  if (resume != nullptr) {
    if (resume->stage != Stage::Gan) throw ConfigError("cannot resume gan training from a psnr checkpoint");
    if (!(resume->generator_config == init.generator_config)) throw ConfigError("resume checkpoint generator config differs");
    if (!resume->discriminator_config || !(*resume->discriminator_config == cfg.discriminator))
      throw ConfigError("resume checkpoint discriminator config differs");
    m.g.load_weights(resume->generator);
    m.d->load_weights(resume->discriminator);
    m.g_opt.load(resume->generator_optimizer, m.g.parameters());
    m.d_opt.load(resume->discriminator_optimizer, m.d->parameters());
    m.step = resume->step;
  } else {
    // distinct stream from the generator's seed
    m.d->init_weights(dataset::record_crop_seed(cfg.seed, 0x0d15c));
  }

  Logger log(cfg, hooks);
  auto& g = m.g;
  auto& d = *m.d;
  auto gp = g.parameters();
  auto dp = d.parameters();
  const float half_lambda = static_cast<float>(cfg.lambda / 2.0);
  const losses::GanWeights weights{cfg.lambda};

  nn::Generator<float>::Trace gtrace;
  nn::Discriminator<float>::Trace real_trace;
  nn::Discriminator<float>::Trace fake_trace;
  for (; m.step < cfg.max_steps;) {
    const auto batch = assemble_batch(data, batch_indices(cfg.seed, m.step, cfg.batch_size, data.size()));
    const auto fake = g.forward(batch.lr, &gtrace);

    // discriminator update; the generated batch is a constant here
    d.zero_grad();
    auto d_scores = losses::make_scores(d.forward(batch.hr, &real_trace), d.forward(fake, &fake_trace));
    const double ld = losses::gan_loss_d(d_scores);
    if (!std::isfinite(ld)) diverge(cfg, snapshot_of(cfg, Stage::Gan, m), "non-finite discriminator loss");
    {
      auto [dr, df] = losses::gan_loss_d_grad(d_scores);
      dr.vec() *= half_lambda;
      df.vec() *= half_lambda;
      d.backward(real_trace, dr, false);
      d.backward(fake_trace, df, false);
    }
    m.d_opt.step(dp);

    // generator update against the refreshed discriminator
    auto g_scores = losses::make_scores(d.forward(batch.hr), d.forward(fake, &fake_trace));
    const double lg = losses::gan_loss_g(g_scores);
    const double l1 = losses::l1_loss(fake, batch.hr);
    if (!std::isfinite(lg) || !std::isfinite(l1))
      diverge(cfg, snapshot_of(cfg, Stage::Gan, m), "non-finite generator loss");
    const auto obj = losses::full_objective(l1, ld, lg, weights);

    auto dout = losses::l1_grad(fake, batch.hr);
    {
      auto grads = losses::gan_loss_g_grad(g_scores);
      grads.second.vec() *= half_lambda;
      const auto dfake = d.backward(fake_trace, grads.second, true, false);
      dout.vec() += dfake.vec();
    }
    g.zero_grad();
    g.backward(gtrace, dout);
    m.g_opt.step(gp);
    ++m.step;

    log(m.step, Stage::Gan, "l1", l1);
    log(m.step, Stage::Gan, "gan_d", ld);
    log(m.step, Stage::Gan, "gan_g", lg);
    log(m.step, Stage::Gan, "d_objective", obj.d_objective);
    log(m.step, Stage::Gan, "g_objective", obj.g_objective);
    log(m.step, Stage::Gan, "real_score_mean", g_scores.real_mean);
    log(m.step, Stage::Gan, "fake_score_mean", g_scores.fake_mean);
    if (hooks.on_step) hooks.on_step(m.step, g, &d);
    if (periodic_due(cfg, m.step)) save_periodic(cfg, m.step, snapshot_of(cfg, Stage::Gan, m));
  }
  return snapshot_of(cfg, Stage::Gan, m);
}

Checkpoint train_gan(const TrainConfig& cfg, const Checkpoint& init, const dataset::SplitManifest& manifest) {
  ManifestPairs data(manifest.train, cfg.seed, cfg.degrade, cfg.budget);
  return train_gan(cfg, init, data);
}

imaging::ImageU8 super_resolve(const nn::Generator<float>& g, const imaging::ImageU8& lr) {
  const auto out = g.forward(nn::image_tensor<float>(lr));
  return imaging::to_u8(nn::item_image(out, 0));
}

}  // namespace abyss::train
