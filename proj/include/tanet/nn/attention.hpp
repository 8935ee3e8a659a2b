// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "tanet/nn/layers.hpp"

namespace tanet::nn {

/// Local pixel-wise attention: a spatial gate from channel-wise average and
/// max pooling, fused by a 7x7 conv (2 -> 1 channels) and a sigmoid, then
/// broadcast-multiplied onto the input.
template <std::floating_point T>
struct LPAModule {
  ConvParams<T> fuse_conv;

  static LPAModule create(ParameterStore<T>& store, const std::string& prefix);

  /// The (N, H, W, 1) gate in (0, 1).
  Var<T> attention_map(const Var<T>& f) const;
  Var<T> forward(const Var<T>& f) const;
};

/// Global strip-wise attention. Column and row means are fused by 1x3 and
/// 3x1 convs, copied back to full resolution, summed, mixed by a 1x1 conv and
/// gated through a sigmoid.
template <std::floating_point T>
struct GSAModule {
  ConvParams<T> h_conv;
  ConvParams<T> v_conv;
  ConvParams<T> fuse_conv;

  static GSAModule create(ParameterStore<T>& store, const std::string& prefix,
                          std::size_t channels);

  /// Pre-sigmoid logits, same shape as `f`.
  Var<T> logits(const Var<T>& f) const;
  Var<T> attention_map(const Var<T>& f) const;
  Var<T> forward(const Var<T>& f) const;
};

/// Global distribution attention. Half of the channels go through affine
/// instance normalization, the other half through a plain conv; the halves
/// are re-joined by a conv and added to the input.
template <std::floating_point T>
struct GDAModule {
  ConvParams<T> pre_conv;     // C -> C
  ConvParams<T> bypass_conv;  // C/2 -> C/2
  ConvParams<T> post_conv;    // C -> C
  Var<T> gamma;               // C/2
  Var<T> beta;                // C/2
  T eps = T(1e-5);

  /// Throws ParameterError for odd `channels`.
  static GDAModule create(ParameterStore<T>& store, const std::string& prefix,
                          std::size_t channels);

  Var<T> forward(const Var<T>& f) const;
};

}  // namespace tanet::nn
