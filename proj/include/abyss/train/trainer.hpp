#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "abyss/dataset.hpp"
#include "abyss/error.hpp"
#include "abyss/nn/tensor.hpp"
#include "abyss/train/checkpoint.hpp"

namespace abyss::train {

/// Training hyperparameters. Defaults follow the published setup: Adam at
/// 1e-4 with (0.9, 0.999), batch 8, lambda 1e-2. `max_steps` has no
/// meaningful default and must be chosen by the operator.
struct TrainConfig {
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 8;
  double lambda = 1e-2;
  Stage stage = Stage::Psnr;
  long max_steps = 0;
  std::uint64_t seed = 0;
  long checkpoint_every = 0;  // 0 disables periodic checkpoints

  nn::GeneratorConfig generator;
  nn::DiscriminatorConfig discriminator;

  // pair generation when training from a manifest
  bool degrade = true;
  std::size_t budget = dataset::kDefaultBudget;

  std::filesystem::path checkpoint_dir;  // periodic and diagnostic checkpoints
  std::filesystem::path log_path;        // appended `step<TAB>stage<TAB>loss<TAB>value`
  std::filesystem::path init_checkpoint;  // required for the GAN stage

  void validate() const;
  std::map<std::string, std::string> snapshot() const;
};

/// Indexable source of training/evaluation pairs.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t size() const = 0;
  virtual dataset::PatchPair get(std::size_t i) const = 0;
  virtual std::string id(std::size_t i) const { return std::to_string(i); }
};

class InMemoryPairs final : public PairSource {
 public:
  explicit InMemoryPairs(std::vector<dataset::PatchPair> pairs) : pairs_(std::move(pairs)) {}
  std::size_t size() const override { return pairs_.size(); }
  dataset::PatchPair get(std::size_t i) const override { return pairs_.at(i); }

 private:
  std::vector<dataset::PatchPair> pairs_;
};

/// Generates pair i on demand from records[i] with a crop seed derived from
/// (seed, i), so the same index always yields the same pair.
class ManifestPairs final : public PairSource {
 public:
  ManifestPairs(std::vector<dataset::FrameRecord> records, std::uint64_t seed, bool degrade, std::size_t budget)
      : records_(std::move(records)), seed_(seed), degrade_(degrade), budget_(budget) {}
  std::size_t size() const override { return records_.size(); }
  dataset::PatchPair get(std::size_t i) const override;
  std::string id(std::size_t i) const override;

 private:
  std::vector<dataset::FrameRecord> records_;
  std::uint64_t seed_;
  bool degrade_;
  std::size_t budget_;
};

/// Indices of the samples in batch `step`: the data is walked epoch by
/// epoch, each epoch in its own seeded permutation. Pure in its arguments,
/// so a resumed run sees the same batches as an uninterrupted one.
std::vector<std::size_t> batch_indices(std::uint64_t seed, long step, int batch_size, std::size_t dataset_size);

struct Batch {
  nn::Tensor<float> lr;
  nn::Tensor<float> hr;
};
Batch assemble_batch(const PairSource& data, const std::vector<std::size_t>& indices);

struct LogEntry {
  long step = 0;
  Stage stage = Stage::Psnr;
  std::string loss;
  double value = 0.0;
};

struct TrainHooks {
  std::function<void(const LogEntry&)> on_log;
  /// Called after each optimizer step with the 1-based step count.
  std::function<void(long, const nn::Generator<float>&, const nn::Discriminator<float>*)> on_step;
};

/// Thrown when a loss turns non-finite. A diagnostic checkpoint of the state
/// before the failing update is written when a checkpoint directory is set.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, Checkpoint state)
      : NumericError(what), state_(std::make_shared<Checkpoint>(std::move(state))) {}
  const Checkpoint& state() const noexcept { return *state_; }

 private:
  std::shared_ptr<Checkpoint> state_;
};

/// Stage one: the generator alone under the pixel L1 loss. Continues from
/// `resume` when given, otherwise starts from a seeded initialization.
Checkpoint train_psnr(const TrainConfig& cfg, const PairSource& data, const Checkpoint* resume = nullptr,
                      const TrainHooks& hooks = {});
Checkpoint train_psnr(const TrainConfig& cfg, const dataset::SplitManifest& manifest);

/// Stage two: per batch one discriminator update on (lambda/2) L_D, then one
/// generator update on (lambda/2) L_G + L1 against the updated
/// discriminator. The generator starts from `init`, the discriminator fresh.
Checkpoint train_gan(const TrainConfig& cfg, const Checkpoint& init, const PairSource& data,
                     const Checkpoint* resume = nullptr, const TrainHooks& hooks = {});
Checkpoint train_gan(const TrainConfig& cfg, const Checkpoint& init, const dataset::SplitManifest& manifest);

/// Runs the generator on one LR image and converts back to 8-bit.
imaging::ImageU8 super_resolve(const nn::Generator<float>& g, const imaging::ImageU8& lr);

}  // namespace abyss::train
