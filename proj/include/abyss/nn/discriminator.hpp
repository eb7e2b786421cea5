#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "abyss/nn/layers.hpp"
#include "abyss/nn/weights.hpp"

namespace abyss::nn {

/// PatchGAN shape: 4x4 convs over `channel_schedule`, stride 2 on every
/// layer but the last, a final 4x4 conv to one channel. No normalization
/// layers exist in this network.
struct DiscriminatorConfig {
  int in_channels = 3;
  std::vector<int> channel_schedule{64, 128, 256, 512};
  int kernel = 4;
  double leaky_slope = 0.2;

  static constexpr bool use_normalization = false;

  int stride_of(std::size_t layer) const noexcept { return layer + 1 < channel_schedule.size() ? 2 : 1; }

  void validate() const {
    if (in_channels < 1) throw ConfigError("discriminator: in_channels must be positive");
    if (channel_schedule.empty()) throw ConfigError("discriminator: empty channel schedule");
    for (int c : channel_schedule)
      if (c < 1) throw ConfigError("discriminator: channel counts must be positive");
    if (kernel < 2) throw ConfigError("discriminator: kernel must be >= 2");
    if (!(leaky_slope >= 0.0 && leaky_slope <= 1.0)) throw ConfigError("discriminator: leaky_slope must lie in [0, 1]");
  }

  /// Side of the input window seen by one output score.
  int receptive_field() const noexcept {
    int rf = kernel;  // final conv, stride 1
    for (std::size_t i = channel_schedule.size(); i-- > 0;) rf = (rf - 1) * stride_of(i) + kernel;
    return rf;
  }

  bool operator==(const DiscriminatorConfig&) const = default;
};

template <typename Scalar>
class Discriminator {
 public:
  struct Trace {
    Tensor<Scalar> input;
    std::vector<Tensor<Scalar>> activations;  // after each leaky ReLU
  };

  Discriminator() : Discriminator(DiscriminatorConfig{}) {}
  explicit Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    int prev = cfg.in_channels;
    for (std::size_t i = 0; i < cfg.channel_schedule.size(); ++i) {
      layers_.emplace_back(prev, cfg.channel_schedule[i], cfg.kernel, cfg.stride_of(i), 1);
      prev = cfg.channel_schedule[i];
    }
    out_conv_ = Conv2d<Scalar>(prev, 1, cfg.kernel, 1, 1);
  }

  const DiscriminatorConfig& config() const noexcept { return cfg_; }

  Shape output_shape(Shape s) const noexcept {
    for (const auto& l : layers_) s = l.output_shape(s);
    return out_conv_.output_shape(s);
  }

  /// Pre-activation patch score map, N x 1 x h x w.
  Tensor<Scalar> forward(const Tensor<Scalar>& img, Trace* trace = nullptr) const {
    if (img.c() != cfg_.in_channels) throw InvalidArgument("discriminator: wrong channel count");
    const int rf = cfg_.receptive_field();
    if (img.h() < rf || img.w() < rf)
      throw InvalidArgument("discriminator: input " + std::to_string(img.h()) + "x" + std::to_string(img.w()) +
                            " is smaller than the " + std::to_string(rf) + "x" + std::to_string(rf) +
                            " receptive field");
    const auto slope = static_cast<Scalar>(cfg_.leaky_slope);
    if (trace != nullptr) {
      trace->input = img;
      trace->activations.clear();
    }
    const Tensor<Scalar>* cur = &img;
    Tensor<Scalar> act;
    for (const auto& l : layers_) {
      Tensor<Scalar> next(l.output_shape(cur->shape()));
      l.forward(cur->view(), next.view());
      leaky_relu_inplace(next.view(), slope);
      act = std::move(next);
      if (trace != nullptr) {
        trace->activations.push_back(act);
        cur = &trace->activations.back();
      } else {
        cur = &act;
      }
    }
    Tensor<Scalar> out(out_conv_.output_shape(cur->shape()));
    out_conv_.forward(cur->view(), out.view());
    return out;
  }

  /// Backpropagates a score-map gradient. Parameter gradients accumulate
  /// only when `accumulate_params` is set; the input gradient is returned
  /// when `want_input_grad` is set.
  Tensor<Scalar> backward(const Trace& trace, const Tensor<Scalar>& dscores, bool want_input_grad,
                          bool accumulate_params = true) {
    const auto slope = static_cast<Scalar>(cfg_.leaky_slope);
    const std::size_t n = layers_.size();
    Tensor<Scalar> d(trace.activations.back().shape());
    auto dv = d.view();
    out_conv_.backward(trace.activations.back().view(), dscores.view(), &dv, accumulate_params);
    for (std::size_t i = n; i-- > 0;) {
      leaky_relu_backward_inplace(trace.activations[i].view(), d.view(), slope);
      const Tensor<Scalar>& in = i == 0 ? trace.input : trace.activations[i - 1];
      if (i == 0 && !want_input_grad) {
        layers_[i].backward(in.view(), std::as_const(d).view(), nullptr, accumulate_params);
        return {};
      }
      Tensor<Scalar> din(in.shape());
      auto div = din.view();
      layers_[i].backward(in.view(), std::as_const(d).view(), &div, accumulate_params);
      d = std::move(din);
    }
    return d;
  }

  std::vector<ParamRef<Scalar>> parameters() {
    std::vector<ParamRef<Scalar>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect("d.conv." + std::to_string(i), out);
    out_conv_.collect("d.conv_out", out);
    return out;
  }

  WeightSet weights() const { return export_weights(const_cast<Discriminator*>(this)->parameters()); }
  void load_weights(const WeightSet& w) { import_weights(w, parameters(), "discriminator"); }
  void zero_grad() { zero_grads(parameters()); }
  std::size_t parameter_count() const { return count_parameters(const_cast<Discriminator*>(this)->parameters()); }

  /// Kaiming-normal with the leaky-ReLU gain.
  void init_weights(std::uint64_t seed) {
    const double gain = std::sqrt(2.0 / (1.0 + cfg_.leaky_slope * cfg_.leaky_slope));
    kaiming_init(parameters(), seed, gain, [](const std::string&) { return 1.0; });
  }

 private:
  DiscriminatorConfig cfg_;
  std::vector<Conv2d<Scalar>> layers_;
  Conv2d<Scalar> out_conv_;
};

template <typename Scalar>
Discriminator<Scalar> make_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  Discriminator<Scalar> d(cfg);
  d.init_weights(seed);
  return d;
}

}  // namespace abyss::nn
