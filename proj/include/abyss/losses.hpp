#pragma once

#include <cmath>
#include <utility>

#include "abyss/nn/tensor.hpp"

namespace abyss::losses {

using nn::Tensor;

/// Mean of a tensor, accumulated relative to its first element. A constant
/// map therefore has a mean exactly equal to that constant.
template <typename Scalar>
Scalar stable_mean(const Tensor<Scalar>& t) {
  if (t.numel() == 0) throw InvalidArgument("mean of an empty tensor");
  const double pivot = static_cast<double>(t.vec()[0]);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t.vec().size(); ++i) acc += static_cast<double>(t.vec()[i]) - pivot;
  return static_cast<Scalar>(pivot + acc / static_cast<double>(t.numel()));
}

/// Mean absolute difference over every element of the batch.
template <typename Scalar>
Scalar l1_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  nn::require_shape(pred.shape(), target.shape(), "l1_loss");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pred.vec().size(); ++i)
    acc += std::abs(static_cast<double>(pred.vec()[i]) - static_cast<double>(target.vec()[i]));
  return static_cast<Scalar>(acc / static_cast<double>(pred.numel()));
}

/// d l1_loss / d pred; sign(0) is taken as 0.
template <typename Scalar>
Tensor<Scalar> l1_grad(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  nn::require_shape(pred.shape(), target.shape(), "l1_grad");
  const Scalar inv = Scalar(1) / static_cast<Scalar>(pred.numel());
  Tensor<Scalar> g(pred.shape());
  g.vec() = (pred.vec() - target.vec()).unaryExpr([inv](Scalar d) {
    return d > Scalar(0) ? inv : (d < Scalar(0) ? -inv : Scalar(0));
  });
  return g;
}

/// Discriminator outputs on real (y) and generated (G(x)) images together
/// with their batch-and-patch means.
template <typename Scalar>
struct RelativisticScores {
  Tensor<Scalar> real_scores;
  Tensor<Scalar> fake_scores;
  Scalar real_mean{};
  Scalar fake_mean{};
};

template <typename Scalar>
RelativisticScores<Scalar> make_scores(Tensor<Scalar> real, Tensor<Scalar> fake) {
  nn::require_shape(fake.shape(), real.shape(), "relativistic scores");
  RelativisticScores<Scalar> s;
  s.real_mean = stable_mean(real);
  s.fake_mean = stable_mean(fake);
  s.real_scores = std::move(real);
  s.fake_scores = std::move(fake);
  return s;
}

namespace detail {

// mean_i (a_i - other_mean + offset)^2
template <typename Scalar>
double relativistic_term(const Tensor<Scalar>& a, Scalar other_mean, double offset) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.vec().size(); ++i) {
    const double r = static_cast<double>(a.vec()[i]) - static_cast<double>(other_mean) + offset;
    acc += r * r;
  }
  return acc / static_cast<double>(a.numel());
}

template <typename Scalar>
void check(const RelativisticScores<Scalar>& s) {
  nn::require_shape(s.fake_scores.shape(), s.real_scores.shape(), "relativistic loss");
}

// Loss  mean (r - mean f + real_offset)^2 + mean (f - mean r + fake_offset)^2
// differentiated through both means.
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> relativistic_grad(const RelativisticScores<Scalar>& s, double real_offset,
                                                            double fake_offset) {
  check(s);
  const auto& r = s.real_scores.vec();
  const auto& f = s.fake_scores.vec();
  const double nr = static_cast<double>(r.size());
  const double nf = static_cast<double>(f.size());
  const double rm = static_cast<double>(s.real_mean);
  const double fm = static_cast<double>(s.fake_mean);

  double real_resid_mean = 0.0;  // mean (r - fm + real_offset)
  for (Eigen::Index i = 0; i < r.size(); ++i) real_resid_mean += static_cast<double>(r[i]) - fm + real_offset;
  real_resid_mean /= nr;
  double fake_resid_mean = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) fake_resid_mean += static_cast<double>(f[i]) - rm + fake_offset;
  fake_resid_mean /= nf;

  Tensor<Scalar> dr(s.real_scores.shape());
  Tensor<Scalar> df(s.fake_scores.shape());
  for (Eigen::Index i = 0; i < r.size(); ++i)
    dr.vec()[i] = static_cast<Scalar>(2.0 / nr * (static_cast<double>(r[i]) - fm + real_offset) -
                                      2.0 / nr * fake_resid_mean);
  for (Eigen::Index i = 0; i < f.size(); ++i)
    df.vec()[i] = static_cast<Scalar>(2.0 / nf * (static_cast<double>(f[i]) - rm + fake_offset) -
                                      2.0 / nf * real_resid_mean);
  return {std::move(dr), std::move(df)};
}

}  // namespace detail

/// Discriminator side: real scores pushed one above the mean fake score,
/// fake scores one below the mean real score.
template <typename Scalar>
Scalar gan_loss_d(const RelativisticScores<Scalar>& s) {
  detail::check(s);
  const double real_term = detail::relativistic_term(s.real_scores, s.fake_mean, -1.0);
  const double fake_term = detail::relativistic_term(s.fake_scores, s.real_mean, +1.0);
  return static_cast<Scalar>(real_term + fake_term);
}

/// Generator side: the same terms with the targets swapped.
template <typename Scalar>
Scalar gan_loss_g(const RelativisticScores<Scalar>& s) {
  detail::check(s);
  const double real_term = detail::relativistic_term(s.real_scores, s.fake_mean, +1.0);
  const double fake_term = detail::relativistic_term(s.fake_scores, s.real_mean, -1.0);
  return static_cast<Scalar>(real_term + fake_term);
}

/// Gradients of gan_loss_d with respect to (real_scores, fake_scores). The
/// means are differentiated as functions of the maps (no stop-gradient).
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> gan_loss_d_grad(const RelativisticScores<Scalar>& s) {
  return detail::relativistic_grad(s, -1.0, +1.0);
}

template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> gan_loss_g_grad(const RelativisticScores<Scalar>& s) {
  return detail::relativistic_grad(s, +1.0, -1.0);
}

struct GanWeights {
  double lambda = 1e-2;
};

/// The two optimizer targets of the min-max objective, both minimized:
/// the discriminator minimizes (lambda/2) * L_D, the generator
/// (lambda/2) * L_G + L1.
struct Objectives {
  double d_objective = 0.0;
  double g_objective = 0.0;
};

inline Objectives full_objective(double l1, double ld, double lg, const GanWeights& w) {
  if (!std::isfinite(l1) || !std::isfinite(ld) || !std::isfinite(lg) || !std::isfinite(w.lambda))
    throw NumericError("full_objective: non-finite input");
  if (w.lambda < 0.0) throw InvalidArgument("full_objective: lambda must be non-negative");
  const double half = w.lambda / 2.0;
  return {half * ld, half * lg + l1};
}

}  // namespace abyss::losses
