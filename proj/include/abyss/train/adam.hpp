#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "abyss/nn/layers.hpp"
#include "abyss/nn/weights.hpp"

namespace abyss::train {

struct AdamParams {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Serializable optimizer state: step count plus first/second moments keyed
/// by parameter name.
struct AdamState {
  long step = 0;
  nn::WeightSet first_moment;
  nn::WeightSet second_moment;
  bool operator==(const AdamState&) const = default;
};

/// Adam with bias correction; moments are allocated on the first step.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamParams p = {}) : p_(p) {}

  long step_count() const noexcept { return t_; }

  void step(const std::vector<nn::ParamRef<Scalar>>& params) {
    if (m_.empty()) allocate(params);
    if (m_.size() != params.size()) throw ConfigError("adam: parameter list changed between steps");
    ++t_;
    const auto b1 = static_cast<Scalar>(p_.beta1);
    const auto b2 = static_cast<Scalar>(p_.beta2);
    const auto bc1 = static_cast<Scalar>(1.0 - std::pow(p_.beta1, static_cast<double>(t_)));
    const auto bc2 = static_cast<Scalar>(1.0 - std::pow(p_.beta2, static_cast<double>(t_)));
    const auto lr = static_cast<Scalar>(p_.learning_rate);
    const auto eps = static_cast<Scalar>(p_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto n = static_cast<Eigen::Index>(params[i].size);
      Eigen::Map<nn::Vec<Scalar>> value(params[i].value, n);
      Eigen::Map<const nn::Vec<Scalar>> grad(params[i].grad, n);
      auto& m = m_[i];
      auto& v = v_[i];
      m = b1 * m + (Scalar(1) - b1) * grad;
      v.array() = b2 * v.array() + (Scalar(1) - b2) * grad.array().square();
      value.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    }
  }

  AdamState state(const std::vector<nn::ParamRef<Scalar>>& params) const {
    AdamState s;
    s.step = t_;
    if (m_.empty()) return s;
    for (std::size_t i = 0; i < params.size(); ++i) {
      s.first_moment.emplace(params[i].name, to_array(params[i], m_[i]));
      s.second_moment.emplace(params[i].name, to_array(params[i], v_[i]));
    }
    return s;
  }

  void load(const AdamState& s, const std::vector<nn::ParamRef<Scalar>>& params) {
    t_ = s.step;
    m_.clear();
    v_.clear();
    if (s.first_moment.empty() && s.second_moment.empty()) {
      if (t_ != 0) throw ConfigError("adam: state has steps but no moments");
      return;
    }
    allocate(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = from_array(s.first_moment, params[i]);
      v_[i] = from_array(s.second_moment, params[i]);
    }
  }

 private:
  void allocate(const std::vector<nn::ParamRef<Scalar>>& params) {
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.push_back(nn::Vec<Scalar>::Zero(static_cast<Eigen::Index>(p.size)));
      v_.push_back(nn::Vec<Scalar>::Zero(static_cast<Eigen::Index>(p.size)));
    }
  }

  static nn::WeightArray to_array(const nn::ParamRef<Scalar>& p, const nn::Vec<Scalar>& v) {
    nn::WeightArray a{p.shape, std::vector<float>(p.size)};
    for (std::size_t i = 0; i < p.size; ++i) a.values[i] = static_cast<float>(v[static_cast<Eigen::Index>(i)]);
    return a;
  }

  static nn::Vec<Scalar> from_array(const nn::WeightSet& set, const nn::ParamRef<Scalar>& p) {
    auto it = set.find(p.name);
    if (it == set.end() || it->second.values.size() != p.size)
      throw ConfigError("adam: optimizer state does not match parameter " + p.name);
    nn::Vec<Scalar> v(static_cast<Eigen::Index>(p.size));
    for (std::size_t i = 0; i < p.size; ++i) v[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(it->second.values[i]);
    return v;
  }

  AdamParams p_;
  long t_ = 0;
  std::vector<nn::Vec<Scalar>> m_;
  std::vector<nn::Vec<Scalar>> v_;
};

}  // namespace abyss::train
