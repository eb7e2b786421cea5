#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "abyss/nn/discriminator.hpp"
#include "abyss/nn/generator.hpp"
#include "abyss/nn/weights.hpp"
#include "abyss/train/adam.hpp"

namespace abyss::train {

enum class Stage { Psnr, Gan };

std::string to_string(Stage s);
Stage parse_stage(const std::string& s);

/// Model weights plus everything needed to resume training.
///
/// On disk (little-endian):
///   "ABYSSCKP"  u32 version
///   u32 n, then n x (str key, str value)          config block
///   u32 m, then m x (str name, u32 ndim, u32 dims[ndim], f32 data[])
/// where str is u32 length + UTF-8 bytes. Array names are the canonical
/// layer names (`g.*`, `d.*`) and optimizer moments (`adam.g.m/<layer>`,
/// `adam.g.v/<layer>`, `adam.d.m/<layer>`, `adam.d.v/<layer>`).
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  Stage stage = Stage::Psnr;
  long step = 0;
  nn::GeneratorConfig generator_config;
  std::optional<nn::DiscriminatorConfig> discriminator_config;
  nn::WeightSet generator;
  nn::WeightSet discriminator;
  AdamState generator_optimizer;
  AdamState discriminator_optimizer;
  /// Free-form snapshot of the training configuration.
  std::map<std::string, std::string> settings;

  bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds the generator described by the checkpoint and loads its weights.
/// Throws ConfigError on any name or shape mismatch.
nn::Generator<float> load_generator(const Checkpoint& ckpt);
nn::Discriminator<float> load_discriminator(const Checkpoint& ckpt);

}  // namespace abyss::train
