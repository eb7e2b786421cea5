#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "abyss/nn/layers.hpp"

namespace abyss::nn {

/// Framework-neutral storage for one named parameter block.
struct WeightArray {
  std::vector<int> shape;
  std::vector<float> values;
  bool operator==(const WeightArray&) const = default;
};

/// Canonical layer name -> weights, e.g. `g.rrdb.12.dense.2.conv.3.weight`.
using WeightSet = std::map<std::string, WeightArray>;

template <typename Scalar>
WeightSet export_weights(const std::vector<ParamRef<Scalar>>& params) {
  WeightSet out;
  for (const auto& p : params) {
    WeightArray a{p.shape, std::vector<float>(p.size)};
    std::transform(p.value, p.value + p.size, a.values.begin(), [](Scalar v) { return static_cast<float>(v); });
    out.emplace(p.name, std::move(a));
  }
  return out;
}

/// Strict load: every parameter must be present with the exact shape and the
/// set must not carry unknown names.
template <typename Scalar>
void import_weights(const WeightSet& set, const std::vector<ParamRef<Scalar>>& params, const std::string& what) {
  if (set.size() != params.size())
    throw ConfigError(what + ": weight set has " + std::to_string(set.size()) + " arrays, model expects " +
                      std::to_string(params.size()));
  for (const auto& p : params) {
    auto it = set.find(p.name);
    if (it == set.end()) throw ConfigError(what + ": missing weights for " + p.name);
    if (it->second.shape != p.shape || it->second.values.size() != p.size)
      throw ConfigError(what + ": shape mismatch for " + p.name);
    std::transform(it->second.values.begin(), it->second.values.end(), p.value,
                   [](float v) { return static_cast<Scalar>(v); });
  }
}

template <typename Scalar>
void zero_grads(const std::vector<ParamRef<Scalar>>& params) {
  for (const auto& p : params) std::fill(p.grad, p.grad + p.size, Scalar(0));
}

template <typename Scalar>
std::size_t count_parameters(const std::vector<ParamRef<Scalar>>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size;
  return n;
}

/// Kaiming-normal (fan-in) weights and zero biases, drawn in canonical
/// parameter order. `branch_scale(name)` multiplies the draw, so residual
/// branches can start near identity.
template <typename Scalar, typename ScaleFn>
void kaiming_init(const std::vector<ParamRef<Scalar>>& params, std::uint64_t seed, double gain, ScaleFn branch_scale) {
  std::mt19937_64 rng(seed);
  for (const auto& p : params) {
    if (p.shape.size() != 4) {
      std::fill(p.value, p.value + p.size, Scalar(0));
      continue;
    }
    const double fan_in = static_cast<double>(p.shape[1]) * p.shape[2] * p.shape[3];
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(fan_in));
    const double scale = branch_scale(p.name);
    for (std::size_t i = 0; i < p.size; ++i) p.value[i] = static_cast<Scalar>(dist(rng) * scale);
  }
}

}  // namespace abyss::nn
