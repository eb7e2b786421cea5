#pragma once

#include <functional>
#include <string>
#include <vector>

#include "abyss/train/trainer.hpp"

namespace abyss::train {

struct EvalRow {
  std::string id;
  double psnr_model = 0.0;
  double psnr_bicubic = 0.0;
};

struct EvalReport {
  double mean_psnr_model = 0.0;
  double mean_psnr_bicubic = 0.0;
  std::vector<EvalRow> rows;
  std::size_t count = 0;

  std::string to_text() const;
};

using SuperResolver = std::function<imaging::ImageU8(const imaging::ImageU8&)>;

/// PSNR of `model(lr)` and of plain bicubic x8 up-sampling of lr, both
/// against hr, per pair and averaged.
EvalReport evaluate(const SuperResolver& model, const PairSource& pairs);

/// Evaluates the checkpoint's generator on the manifest's test split. Pairs
/// are cropped with the manifest seed, degraded or not per `degrade`.
EvalReport evaluate(const Checkpoint& ckpt, const dataset::SplitManifest& manifest, bool degrade,
                    std::size_t budget = dataset::kDefaultBudget);

}  // namespace abyss::train
