#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <type_traits>

#include <Eigen/Core>

#include "abyss/error.hpp"

namespace abyss::nn {

/// NCHW extents.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  std::size_t item() const noexcept { return static_cast<std::size_t>(c) * plane(); }
  std::size_t numel() const noexcept { return static_cast<std::size_t>(n) * item(); }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

/// Strided window over a batch: `c` channels of each item starting at `data`,
/// consecutive items `batch_stride` elements apart. A channel range of a
/// tensor is such a window since each item stores its channels contiguously.
template <typename Scalar, bool Const>
struct BasicView {
  using Pointer = std::conditional_t<Const, const Scalar*, Scalar*>;
  Pointer data = nullptr;
  Shape shape;
  std::ptrdiff_t batch_stride = 0;

  Pointer item(int b) const noexcept { return data + b * batch_stride; }

  operator BasicView<Scalar, true>() const noexcept
    requires(!Const)
  {
    return {data, shape, batch_stride};
  }
};

template <typename Scalar>
using ConstView = BasicView<Scalar, true>;
template <typename Scalar>
using MutView = BasicView<Scalar, false>;

/// Dense NCHW tensor backed by an Eigen vector.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape s) : shape_(s), data_(Vector::Zero(static_cast<Eigen::Index>(s.numel()))) {}
  Tensor(int n, int c, int h, int w) : Tensor(Shape{n, c, h, w}) {}

  const Shape& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int c() const noexcept { return shape_.c; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  std::size_t numel() const noexcept { return shape_.numel(); }

  Vector& vec() noexcept { return data_; }
  const Vector& vec() const noexcept { return data_; }
  Scalar* data() noexcept { return data_.data(); }
  const Scalar* data() const noexcept { return data_.data(); }

  Scalar& operator()(int b, int ch, int y, int x) noexcept { return data_[index(b, ch, y, x)]; }
  Scalar operator()(int b, int ch, int y, int x) const noexcept { return data_[index(b, ch, y, x)]; }

  std::ptrdiff_t index(int b, int ch, int y, int x) const noexcept {
    return static_cast<std::ptrdiff_t>(((static_cast<std::size_t>(b) * shape_.c + ch) * shape_.h + y) * shape_.w + x);
  }

  ConstView<Scalar> view() const noexcept { return channels(0, shape_.c); }
  MutView<Scalar> view() noexcept { return channels(0, shape_.c); }

  ConstView<Scalar> channels(int first, int count) const noexcept {
    return {data() + static_cast<std::ptrdiff_t>(first * shape_.plane()), Shape{shape_.n, count, shape_.h, shape_.w},
            static_cast<std::ptrdiff_t>(shape_.item())};
  }
  MutView<Scalar> channels(int first, int count) noexcept {
    return {data() + static_cast<std::ptrdiff_t>(first * shape_.plane()), Shape{shape_.n, count, shape_.h, shape_.w},
            static_cast<std::ptrdiff_t>(shape_.item())};
  }

  void set_zero() { data_.setZero(); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    out.vec() = data_.template cast<Other>();
    return out;
  }

 private:
  Shape shape_;
  Vector data_;
};

template <typename Scalar>
void copy_into(ConstView<Scalar> src, MutView<Scalar> dst) {
  const auto count = static_cast<std::ptrdiff_t>(src.shape.item());
  for (int b = 0; b < src.shape.n; ++b) std::copy(src.item(b), src.item(b) + count, dst.item(b));
}

template <typename Scalar>
void add_into(ConstView<Scalar> src, MutView<Scalar> dst) {
  const auto count = static_cast<std::ptrdiff_t>(src.shape.item());
  for (int b = 0; b < src.shape.n; ++b) {
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> d(dst.item(b), count);
    d += Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(src.item(b), count);
  }
}

inline void require_shape(const Shape& got, const Shape& want, const char* what) {
  if (!(got == want)) throw InvalidArgument(std::string(what) + ": expected " + want.str() + ", got " + got.str());
}

}  // namespace abyss::nn
