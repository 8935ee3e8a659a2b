// SPDX-License-Identifier: Apache-2.0
#include "tanet/nn/layers.hpp"

#include <cmath>

namespace tanet::nn {

template <std::floating_point T>
Var<T> ParameterStore<T>::add(std::string name, Tensor<T> value) {
  for (const auto& p : params_) {
    if (p.name == name) throw UsageError("duplicate parameter name: " + name);
  }
  Var<T> v = Var<T>::parameter(std::move(value));
  params_.push_back({std::move(name), v});
  return v;
}

template <std::floating_point T>
ConvParams<T> ParameterStore<T>::conv(const std::string& name, std::size_t kh,
                                      std::size_t kw, std::size_t c_in,
                                      std::size_t c_out, std::size_t stride,
                                      Init init) {
  Tensor<T> w(Shape::kernel(kh, kw, c_in, c_out));
  if (init == Init::kFanIn) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(kh * kw * c_in));
    for (auto& v : w.data()) v = static_cast<T>((2.0 * uniform01(rng_) - 1.0) * bound);
  }
  ConvParams<T> p;
  p.weight = add(name + ".weight", std::move(w));
  p.bias = add(name + ".bias", Tensor<T>(Shape::vector(c_out)));
  p.options = {stride, kh / 2, kw / 2};
  return p;
}

template <std::floating_point T>
Var<T> ParameterStore<T>::constant_vector(const std::string& name, std::size_t length,
                                          T value) {
  return add(name, Tensor<T>(Shape::vector(length), value));
}

template <std::floating_point T>
std::size_t ParameterStore<T>::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var.value().size();
  return n;
}

template <std::floating_point T>
Var<T> ParameterStore<T>::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.var;
  }
  throw UsageError("unknown parameter: " + name);
}

template <std::floating_point T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}  // namespace tanet::nn
