// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "tanet/error.hpp"

namespace tanet {

/// Rank-4 extent. Activations use (batch, height, width, channels); conv
/// kernels reuse the same storage as (kh, kw, c_in, c_out).
class Shape {
 public:
  constexpr Shape() = default;
  constexpr Shape(std::size_t n, std::size_t h, std::size_t w, std::size_t c)
      : dims_{n, h, w, c} {}

  static Shape kernel(std::size_t kh, std::size_t kw, std::size_t c_in,
                      std::size_t c_out) {
    return {kh, kw, c_in, c_out};
  }
  static Shape vector(std::size_t len) { return {1, 1, 1, len}; }

  constexpr std::size_t batch() const { return dims_[0]; }
  constexpr std::size_t height() const { return dims_[1]; }
  constexpr std::size_t width() const { return dims_[2]; }
  constexpr std::size_t channels() const { return dims_[3]; }
  constexpr std::size_t operator[](std::size_t i) const { return dims_[i]; }
  constexpr std::size_t size() const {
    return dims_[0] * dims_[1] * dims_[2] * dims_[3];
  }
  constexpr const std::array<std::size_t, 4>& dims() const { return dims_; }

  constexpr bool operator==(const Shape&) const = default;

  std::string str() const;

 private:
  std::array<std::size_t, 4> dims_{1, 1, 1, 1};
};

/// 64-byte aligned storage so vectorized kernels take the same path for every
/// buffer, independent of heap layout.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense NHWC row-major array. Plain value type; autodiff lives in Var.
template <std::floating_point T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, const std::vector<T>& data);
  Tensor(Shape shape, AlignedVector<T> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }

  std::size_t offset(std::size_t n, std::size_t h, std::size_t w,
                     std::size_t c) const {
    return ((n * shape_.height() + h) * shape_.width() + w) *
               shape_.channels() +
           c;
  }
  T& at(std::size_t n, std::size_t h, std::size_t w, std::size_t c) {
    return data_[offset(n, h, w, c)];
  }
  T at(std::size_t n, std::size_t h, std::size_t w, std::size_t c) const {
    return data_[offset(n, h, w, c)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  void fill(T v);
  bool all_finite() const;

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  /// One sample of a batch as a batch-1 tensor.
  Tensor sample(std::size_t n) const;

  Tensor& operator+=(const Tensor& other);

 private:
  Shape shape_{};
  AlignedVector<T> data_ = AlignedVector<T>(1, T(0));
};

template <std::floating_point To, std::floating_point From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  if constexpr (std::same_as<To, From>) {
    return t;
  } else {
    AlignedVector<To> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
    return Tensor<To>(t.shape(), std::move(out));
  }
}

/// Stack batch-1 tensors of identical (h, w, c) along the batch axis.
template <std::floating_point T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items);

/// Throws ShapeError with `what` as context when shapes differ.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace tanet
