#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "abyss/nn/layers.hpp"
#include "abyss/nn/weights.hpp"

namespace abyss::nn {

struct GeneratorConfig {
  int n_rrdb = 16;
  int base_channels = 64;
  int growth_channels = 32;
  int scale = 8;
  double residual_scale = 0.2;
  double leaky_slope = 0.2;

  int upsample_stages() const noexcept { return std::countr_zero(static_cast<unsigned>(scale)); }

  void validate() const {
    if (n_rrdb < 1) throw ConfigError("generator: n_rrdb must be >= 1");
    if (base_channels < 1 || growth_channels < 1) throw ConfigError("generator: channel counts must be positive");
    if (scale < 2 || !std::has_single_bit(static_cast<unsigned>(scale)))
      throw ConfigError("generator: scale must be a power of two >= 2");
    if (!(leaky_slope >= 0.0 && leaky_slope <= 1.0)) throw ConfigError("generator: leaky_slope must lie in [0, 1]");
  }
  bool operator==(const GeneratorConfig&) const = default;
};

/// Five densely connected 3x3 convs; the last one's output is scaled and
/// added back to the block input.
template <typename Scalar>
class DenseBlock {
 public:
  /// Input followed by the four intermediate activations, channel-concatenated.
  struct Trace {
    Tensor<Scalar> features;
  };

  DenseBlock() = default;
  DenseBlock(int channels, int growth, Scalar residual_scale, Scalar slope)
      : channels_(channels), growth_(growth), residual_scale_(residual_scale), slope_(slope) {
    for (int i = 0; i < 4; ++i) convs_[i] = Conv2d<Scalar>(channels + i * growth, growth, 3, 1, 1);
    convs_[4] = Conv2d<Scalar>(channels + 4 * growth, channels, 3, 1, 1);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Trace* trace) const {
    const Shape s = x.shape();
    Tensor<Scalar> feats(s.n, channels_ + 4 * growth_, s.h, s.w);
    copy_into(x.view(), feats.channels(0, channels_));
    for (int i = 0; i < 4; ++i) {
      auto slot = feats.channels(channels_ + i * growth_, growth_);
      convs_[i].forward(std::as_const(feats).channels(0, channels_ + i * growth_), slot);
      leaky_relu_inplace(slot, slope_);
    }
    Tensor<Scalar> out(s);
    convs_[4].forward(std::as_const(feats).view(), out.view());
    out.vec() = out.vec() * residual_scale_ + x.vec();
    if (trace != nullptr) trace->features = std::move(feats);
    return out;
  }

  Tensor<Scalar> backward(const Trace& trace, const Tensor<Scalar>& dout) {
    const auto& feats = trace.features;
    Tensor<Scalar> dfeats(feats.shape());
    Tensor<Scalar> dy(dout.shape());
    dy.vec() = dout.vec() * residual_scale_;
    auto all = dfeats.view();
    convs_[4].backward(feats.view(), std::as_const(dy).view(), &all);
    for (int i = 3; i >= 0; --i) {
      const int first = channels_ + i * growth_;
      auto slot = dfeats.channels(first, growth_);
      leaky_relu_backward_inplace(feats.channels(first, growth_), slot, slope_);
      auto prefix = dfeats.channels(0, first);
      convs_[i].backward(feats.channels(0, first), std::as_const(dfeats).channels(first, growth_), &prefix);
    }
    Tensor<Scalar> dx = dout;
    add_into(std::as_const(dfeats).channels(0, channels_), dx.view());
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
    for (int i = 0; i < 5; ++i) convs_[i].collect(prefix + ".conv." + std::to_string(i), out);
  }

 private:
  int channels_ = 0;
  int growth_ = 0;
  Scalar residual_scale_ = Scalar(0.2);
  Scalar slope_ = Scalar(0.2);
  std::array<Conv2d<Scalar>, 5> convs_;
};

/// Residual-in-residual dense block: three dense blocks in sequence, the
/// chain's output scaled and added to the block input.
template <typename Scalar>
class Rrdb {
 public:
  struct Trace {
    std::array<typename DenseBlock<Scalar>::Trace, 3> blocks;
  };

  Rrdb() = default;
  Rrdb(int channels, int growth, Scalar residual_scale, Scalar slope) : residual_scale_(residual_scale) {
    for (auto& b : blocks_) b = DenseBlock<Scalar>(channels, growth, residual_scale, slope);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Trace* trace) const {
    Tensor<Scalar> h = blocks_[0].forward(x, trace ? &trace->blocks[0] : nullptr);
    h = blocks_[1].forward(h, trace ? &trace->blocks[1] : nullptr);
    h = blocks_[2].forward(h, trace ? &trace->blocks[2] : nullptr);
    h.vec() = h.vec() * residual_scale_ + x.vec();
    return h;
  }

  Tensor<Scalar> backward(const Trace& trace, const Tensor<Scalar>& dout) {
    Tensor<Scalar> d(dout.shape());
    d.vec() = dout.vec() * residual_scale_;
    for (int i = 2; i >= 0; --i) d = blocks_[i].backward(trace.blocks[i], d);
    d.vec() += dout.vec();
    return d;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
    for (int i = 0; i < 3; ++i) blocks_[i].collect(prefix + ".dense." + std::to_string(i), out);
  }

 private:
  Scalar residual_scale_ = Scalar(0.2);
  std::array<DenseBlock<Scalar>, 3> blocks_;
};

/// RRDB super-resolution generator with learned sub-pixel up-sampling:
///
///   conv_first -> n x RRDB -> trunk_conv -> (+ conv_first features)
///   -> log2(scale) x [conv C->4C, pixel shuffle x2, leaky ReLU]
///   -> hr_conv + leaky ReLU -> conv_last
///
/// The output is linear; callers clamp when converting to 8-bit.
template <typename Scalar>
class Generator {
 public:
  struct Trace {
    Tensor<Scalar> input;
    Tensor<Scalar> first;  // conv_first output, also the global skip
    std::vector<typename Rrdb<Scalar>::Trace> rrdbs;
    Tensor<Scalar> trunk_input;
    std::vector<Tensor<Scalar>> stage_inputs;
    std::vector<Tensor<Scalar>> stage_outputs;  // after activation
    Tensor<Scalar> hr_features;                 // after hr_conv activation
  };

  Generator() : Generator(GeneratorConfig{}) {}
  explicit Generator(const GeneratorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int c = cfg.base_channels;
    const auto rs = static_cast<Scalar>(cfg.residual_scale);
    const auto slope = static_cast<Scalar>(cfg.leaky_slope);
    conv_first_ = Conv2d<Scalar>(3, c, 3, 1, 1);
    rrdbs_.reserve(static_cast<std::size_t>(cfg.n_rrdb));
    for (int i = 0; i < cfg.n_rrdb; ++i) rrdbs_.emplace_back(c, cfg.growth_channels, rs, slope);
    trunk_conv_ = Conv2d<Scalar>(c, c, 3, 1, 1);
    for (int i = 0; i < cfg.upsample_stages(); ++i) up_convs_.emplace_back(c, 4 * c, 3, 1, 1);
    hr_conv_ = Conv2d<Scalar>(c, c, 3, 1, 1);
    conv_last_ = Conv2d<Scalar>(c, 3, 3, 1, 1);
  }

  const GeneratorConfig& config() const noexcept { return cfg_; }

  Shape output_shape(const Shape& in) const noexcept { return {in.n, 3, in.h * cfg_.scale, in.w * cfg_.scale}; }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Trace* trace = nullptr) const {
    if (x.c() != 3) throw InvalidArgument("generator: expected 3 input channels");
    if (x.h() < 4 || x.w() < 4) throw InvalidArgument("generator: input must be at least 4x4");
    const auto slope = static_cast<Scalar>(cfg_.leaky_slope);

    Tensor<Scalar> first(conv_first_.output_shape(x.shape()));
    conv_first_.forward(x.view(), first.view());

    if (trace != nullptr) trace->rrdbs.assign(rrdbs_.size(), {});
    Tensor<Scalar> h = first;
    for (std::size_t i = 0; i < rrdbs_.size(); ++i) h = rrdbs_[i].forward(h, trace ? &trace->rrdbs[i] : nullptr);

    Tensor<Scalar> fea(first.shape());
    trunk_conv_.forward(h.view(), fea.view());
    fea.vec() += first.vec();

    if (trace != nullptr) {
      trace->input = x;
      trace->first = std::move(first);
      trace->trunk_input = std::move(h);
      trace->stage_inputs.clear();
      trace->stage_outputs.clear();
    }

    for (const auto& up : up_convs_) {
      Tensor<Scalar> u(up.output_shape(fea.shape()));
      up.forward(fea.view(), u.view());
      Tensor<Scalar> a = pixel_shuffle(u, 2);
      leaky_relu_inplace(a.view(), slope);
      if (trace != nullptr) trace->stage_inputs.push_back(std::move(fea));
      fea = std::move(a);
    }

    Tensor<Scalar> hr(fea.shape());
    hr_conv_.forward(fea.view(), hr.view());
    leaky_relu_inplace(hr.view(), slope);

    Tensor<Scalar> out(conv_last_.output_shape(hr.shape()));
    conv_last_.forward(hr.view(), out.view());

    if (trace != nullptr) {
      // the last stage output is the hr_conv input
      trace->stage_outputs.push_back(std::move(fea));
      trace->hr_features = std::move(hr);
    }
    return out;
  }

  /// Accumulates parameter gradients. Returns the input gradient when
  /// `want_input_grad` is set, otherwise an empty tensor.
  Tensor<Scalar> backward(const Trace& trace, const Tensor<Scalar>& dout, bool want_input_grad = false) {
    const auto slope = static_cast<Scalar>(cfg_.leaky_slope);

    Tensor<Scalar> dhr(trace.hr_features.shape());
    auto dhr_view = dhr.view();
    conv_last_.backward(trace.hr_features.view(), dout.view(), &dhr_view);
    leaky_relu_backward_inplace(trace.hr_features.view(), dhr.view(), slope);

    const Tensor<Scalar>& last_stage = trace.stage_outputs.back();
    Tensor<Scalar> dfea(last_stage.shape());
    auto dfea_view = dfea.view();
    hr_conv_.backward(last_stage.view(), std::as_const(dhr).view(), &dfea_view);

    for (int s = static_cast<int>(up_convs_.size()) - 1; s >= 0; --s) {
      const Tensor<Scalar>& activated = s + 1 < static_cast<int>(up_convs_.size())
                                            ? trace.stage_inputs[static_cast<std::size_t>(s) + 1]
                                            : last_stage;
      leaky_relu_backward_inplace(activated.view(), dfea.view(), slope);
      Tensor<Scalar> du = pixel_unshuffle(dfea, 2);
      const auto& input = trace.stage_inputs[static_cast<std::size_t>(s)];
      Tensor<Scalar> din(input.shape());
      auto din_view = din.view();
      up_convs_[static_cast<std::size_t>(s)].backward(input.view(), std::as_const(du).view(), &din_view);
      dfea = std::move(din);
    }

    // fea = first + trunk_conv(h)
    Tensor<Scalar> dh(trace.trunk_input.shape());
    auto dh_view = dh.view();
    trunk_conv_.backward(trace.trunk_input.view(), std::as_const(dfea).view(), &dh_view);
    for (int i = static_cast<int>(rrdbs_.size()) - 1; i >= 0; --i)
      dh = rrdbs_[static_cast<std::size_t>(i)].backward(trace.rrdbs[static_cast<std::size_t>(i)], dh);
    dfea.vec() += dh.vec();

    Tensor<Scalar> dx;
    if (want_input_grad) {
      dx = Tensor<Scalar>(trace.input.shape());
      auto dx_view = dx.view();
      conv_first_.backward(trace.input.view(), std::as_const(dfea).view(), &dx_view);
    } else {
      conv_first_.backward(trace.input.view(), std::as_const(dfea).view(), nullptr);
    }
    return dx;
  }

  /// Canonical, stable order; names are the checkpoint keys.
  std::vector<ParamRef<Scalar>> parameters() {
    std::vector<ParamRef<Scalar>> out;
    conv_first_.collect("g.conv_first", out);
    for (std::size_t i = 0; i < rrdbs_.size(); ++i) rrdbs_[i].collect("g.rrdb." + std::to_string(i), out);
    trunk_conv_.collect("g.trunk_conv", out);
    for (std::size_t i = 0; i < up_convs_.size(); ++i) up_convs_[i].collect("g.upsample." + std::to_string(i) + ".conv", out);
    hr_conv_.collect("g.hr_conv", out);
    conv_last_.collect("g.conv_last", out);
    return out;
  }

  WeightSet weights() const { return export_weights(const_cast<Generator*>(this)->parameters()); }
  void load_weights(const WeightSet& w) { import_weights(w, parameters(), "generator"); }
  void zero_grad() { zero_grads(parameters()); }
  std::size_t parameter_count() const { return count_parameters(const_cast<Generator*>(this)->parameters()); }

  /// Kaiming-normal init; convs inside the RRDB trunk are scaled by 0.1.
  void init_weights(std::uint64_t seed) {
    kaiming_init(parameters(), seed, std::sqrt(2.0), [](const std::string& name) {
      return name.rfind("g.rrdb.", 0) == 0 ? kResidualInitScale : 1.0;
    });
  }

  static constexpr double kResidualInitScale = 0.1;

  Conv2d<Scalar>& conv_last() noexcept { return conv_last_; }

 private:
  GeneratorConfig cfg_;
  Conv2d<Scalar> conv_first_;
  std::vector<Rrdb<Scalar>> rrdbs_;
  Conv2d<Scalar> trunk_conv_;
  std::vector<Conv2d<Scalar>> up_convs_;
  Conv2d<Scalar> hr_conv_;
  Conv2d<Scalar> conv_last_;
};

template <typename Scalar>
Generator<Scalar> make_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  Generator<Scalar> g(cfg);
  g.init_weights(seed);
  return g;
}

}  // namespace abyss::nn
