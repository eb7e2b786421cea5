#pragma once

#include "abyss/imaging/image.hpp"
#include "abyss/nn/tensor.hpp"

namespace abyss::nn {

/// Writes an 8-bit RGB image into batch item `b` of an N x 3 x H x W tensor,
/// scaled to [0, 1].
template <typename Scalar>
void store_image(const imaging::ImageU8& img, Tensor<Scalar>& t, int b) {
  if (t.c() != img.channels || t.h() != img.height || t.w() != img.width)
    throw InvalidArgument("store_image: image does not match tensor item shape");
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) t(b, c, y, x) = static_cast<Scalar>(img.at(x, y, c)) / Scalar(255);
}

template <typename Scalar>
Tensor<Scalar> image_tensor(const imaging::ImageU8& img) {
  Tensor<Scalar> t(1, img.channels, img.height, img.width);
  store_image(img, t, 0);
  return t;
}

/// Batch item `b` as a float image (unclamped).
template <typename Scalar>
imaging::ImageF item_image(const Tensor<Scalar>& t, int b) {
  imaging::ImageF img(t.w(), t.h(), 0.0f, t.c());
  for (int y = 0; y < t.h(); ++y)
    for (int x = 0; x < t.w(); ++x)
      for (int c = 0; c < t.c(); ++c) img.at(x, y, c) = static_cast<float>(t(b, c, y, x));
  return img;
}

}  // namespace abyss::nn
