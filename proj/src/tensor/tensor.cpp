// SPDX-License-Identifier: Apache-2.0
#include "tanet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace tanet {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << dims_[0] << ", " << dims_[1] << ", " << dims_[2] << ", "
     << dims_[3] << ')';
  return os.str();
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.str() +
                     " vs " + b.str());
  }
}

namespace {

void check_dims(const Shape& s) {
  for (std::size_t d : s.dims()) {
    if (d == 0) throw ShapeError("tensor dimensions must be >= 1, got " + s.str());
  }
}

}  // namespace

template <std::floating_point T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  check_dims(shape);
  data_.assign(shape.size(), fill);
}

template <std::floating_point T>
Tensor<T>::Tensor(Shape shape, const std::vector<T>& data)
    : Tensor(shape, AlignedVector<T>(data.begin(), data.end())) {}

template <std::floating_point T>
Tensor<T>::Tensor(Shape shape, AlignedVector<T> data)
    : shape_(shape), data_(std::move(data)) {
  check_dims(shape);
  if (data_.size() != shape.size()) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape.str());
  }
}

template <std::floating_point T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <std::floating_point T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template <std::floating_point T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape.size() != shape_.size()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(shape, data_);
}

template <std::floating_point T>
Tensor<T> Tensor<T>::sample(std::size_t n) const {
  if (n >= shape_.batch()) throw ShapeError("sample index out of range");
  const std::size_t per = shape_.size() / shape_.batch();
  Shape s(1, shape_.height(), shape_.width(), shape_.channels());
  AlignedVector<T> out(data_.begin() + static_cast<std::ptrdiff_t>(n * per),
                     data_.begin() + static_cast<std::ptrdiff_t>((n + 1) * per));
  return Tensor(s, std::move(out));
}

template <std::floating_point T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  require_same_shape(shape_, other.shape_, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <std::floating_point T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items) {
  if (items.empty()) throw ShapeError("stack_batch: no items");
  const Shape first = items.front().shape();
  Shape out_shape(items.size(), first.height(), first.width(), first.channels());
  AlignedVector<T> data;
  data.reserve(out_shape.size());
  for (const auto& t : items) {
    if (t.shape().batch() != 1 || t.shape().height() != first.height() ||
        t.shape().width() != first.width() ||
        t.shape().channels() != first.channels()) {
      throw ShapeError("stack_batch: inconsistent item shape " + t.shape().str());
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor<T>(out_shape, std::move(data));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> stack_batch(std::span<const Tensor<float>>);
template Tensor<double> stack_batch(std::span<const Tensor<double>>);

}  // namespace tanet
