// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tanet/autograd.hpp"
#include "tanet/ops.hpp"

namespace tanet::nn {

template <std::floating_point T>
struct NamedParameter {
  std::string name;
  Var<T> var;
};

/// Weight, bias and geometry of one convolution.
template <std::floating_point T>
struct ConvParams {
  Var<T> weight;  // (kh, kw, c_in, c_out)
  Var<T> bias;    // (c_out)
  ops::Conv2dOptions options;

  Var<T> operator()(const Var<T>& x) const {
    return ops::conv2d(x, weight, bias, options);
  }
  std::size_t in_channels() const { return weight.shape()[2]; }
  std::size_t out_channels() const { return weight.shape()[3]; }
};

enum class Init {
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero bias.
  kFanIn,
  kZero,
};

/// Owns the ordered list of trainable tensors of a network and the seeded
/// generator used to initialize them. Registration order is the
/// serialization order.
template <std::floating_point T>
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed) : rng_(seed) {}

  /// Square kernels get symmetric "same" padding unless `options` overrides.
  ConvParams<T> conv(const std::string& name, std::size_t kh, std::size_t kw,
                     std::size_t c_in, std::size_t c_out, std::size_t stride = 1,
                     Init init = Init::kFanIn);

  Var<T> constant_vector(const std::string& name, std::size_t length, T value);

  const std::vector<NamedParameter<T>>& parameters() const { return params_; }
  std::size_t count() const;

  /// Throws UsageError for unknown names.
  Var<T> find(const std::string& name) const;

  void zero_grad();

 private:
  Var<T> add(std::string name, Tensor<T> value);

  std::mt19937_64 rng_;
  std::vector<NamedParameter<T>> params_;
};

/// Uniform double in [0, 1) from the top 53 bits of one generator draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}  // namespace tanet::nn
