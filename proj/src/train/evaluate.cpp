#include "abyss/train/evaluate.hpp"

#include <sstream>

#include "abyss/imaging/psnr.hpp"
#include "abyss/imaging/resize.hpp"

namespace abyss::train {

EvalReport evaluate(const SuperResolver& model, const PairSource& pairs) {
  if (pairs.size() == 0) throw InvalidArgument("evaluate: test split is empty");
  EvalReport r;
  double sum_model = 0.0;
  double sum_bicubic = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto p = pairs.get(i);
    const auto sr = model(p.lr);
    const auto bicubic = imaging::bicubic_resize(p.lr, p.hr.width, p.hr.height);
    EvalRow row{pairs.id(i), imaging::psnr(sr, p.hr), imaging::psnr(bicubic, p.hr)};
    sum_model += row.psnr_model;
    sum_bicubic += row.psnr_bicubic;
    r.rows.push_back(std::move(row));
  }
  r.count = r.rows.size();
  r.mean_psnr_model = sum_model / static_cast<double>(r.count);
  r.mean_psnr_bicubic = sum_bicubic / static_cast<double>(r.count);
  return r;
}

EvalReport evaluate(const Checkpoint& ckpt, const dataset::SplitManifest& manifest, bool degrade, std::size_t budget) {
  const auto g = load_generator(ckpt);
  if (g.config().scale != dataset::kHrSize / dataset::kLrSize)
    throw ConfigError("evaluate: checkpoint generator scale does not match the 32->256 pair geometry");
  ManifestPairs pairs(manifest.test, manifest.seed, degrade, budget);
  return evaluate([&g](const imaging::ImageU8& lr) { return super_resolve(g, lr); }, pairs);
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os.precision(10);
  os << "count\t" << count << '\n'
     << "mean_psnr_model\t" << mean_psnr_model << '\n'
     << "mean_psnr_bicubic\t" << mean_psnr_bicubic << '\n';
  for (const auto& row : rows) os << "row\t" << row.id << '\t' << row.psnr_model << '\t' << row.psnr_bicubic << '\n';
  return os.str();
}

}  // namespace abyss::train
