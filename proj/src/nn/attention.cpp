// SPDX-License-Identifier: Apache-2.0
#include "tanet/nn/attention.hpp"

namespace tanet::nn {

template <std::floating_point T>
LPAModule<T> LPAModule<T>::create(ParameterStore<T>& store, const std::string& prefix) {
  return {store.conv(prefix + ".fuse_conv", 7, 7, 2, 1)};
}

template <std::floating_point T>
Var<T> LPAModule<T>::attention_map(const Var<T>& f) const {
  Var<T> pooled = ops::concat_channels<T>({ops::channel_avg_pool(f), ops::channel_max_pool(f)});
  return ops::sigmoid(fuse_conv(pooled));
}

template <std::floating_point T>
Var<T> LPAModule<T>::forward(const Var<T>& f) const {
  return ops::mul(attention_map(f), f);
}

template <std::floating_point T>
GSAModule<T> GSAModule<T>::create(ParameterStore<T>& store, const std::string& prefix,
                                  std::size_t channels) {
  GSAModule m;
  m.h_conv = store.conv(prefix + ".h_conv", 1, 3, channels, channels);
  m.v_conv = store.conv(prefix + ".v_conv", 3, 1, channels, channels);
  m.fuse_conv = store.conv(prefix + ".fuse_conv", 1, 1, channels, channels);
  return m;
}

template <std::floating_point T>
Var<T> GSAModule<T>::logits(const Var<T>& f) const {
  const std::size_t h = f.shape().height();
  const std::size_t w = f.shape().width();
  Var<T> horizontal = ops::expand(h_conv(ops::strip_pool_h(f)), h, w);
  Var<T> vertical = ops::expand(v_conv(ops::strip_pool_v(f)), h, w);
  return fuse_conv(ops::add(horizontal, vertical));
}

template <std::floating_point T>
Var<T> GSAModule<T>::attention_map(const Var<T>& f) const {
  return ops::sigmoid(logits(f));
}

template <std::floating_point T>
Var<T> GSAModule<T>::forward(const Var<T>& f) const {
  return ops::mul(attention_map(f), f);
}

template <std::floating_point T>
GDAModule<T> GDAModule<T>::create(ParameterStore<T>& store, const std::string& prefix,
                                  std::size_t channels) {
  if (channels < 2 || channels % 2 != 0) {
    throw ParameterError("GDA needs an even channel count, got " +
                         std::to_string(channels));
  }
  const std::size_t half = channels / 2;
  GDAModule m;
  m.pre_conv = store.conv(prefix + ".pre_conv", 3, 3, channels, channels);
  m.gamma = store.constant_vector(prefix + ".gamma", half, T(1));
  m.beta = store.constant_vector(prefix + ".beta", half, T(0));
  m.bypass_conv = store.conv(prefix + ".bypass_conv", 3, 3, half, half);
  m.post_conv = store.conv(prefix + ".post_conv", 3, 3, channels, channels);
  return m;
}

template <std::floating_point T>
Var<T> GDAModule<T>::forward(const Var<T>& f) const {
  if (f.shape().channels() != pre_conv.in_channels()) {
    throw ShapeError("GDA: input has " + std::to_string(f.shape().channels()) +
                     " channels, module expects " + std::to_string(pre_conv.in_channels()));
  }
  auto [first, second] = ops::split_channels(pre_conv(f), f.shape().channels() / 2);
  Var<T> normalized = ops::instance_norm(first, gamma, beta, eps);
  Var<T> kept = bypass_conv(second);
  return ops::add(post_conv(ops::concat_channels<T>({normalized, kept})), f);
}

template struct LPAModule<float>;
template struct LPAModule<double>;
template struct GSAModule<float>;
template struct GSAModule<double>;
template struct GDAModule<float>;
template struct GDAModule<double>;

}  // namespace tanet::nn
