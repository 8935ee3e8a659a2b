// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tanet/autograd.hpp"

// Differentiable primitives. Every op computes its value eagerly and records
// a backward closure on the active Tape when any input requires a gradient.
namespace tanet::ops {

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

/// Output spatial extent of a convolution; throws ShapeError when <= 0.
std::size_t conv_output_dim(std::size_t in, std::size_t kernel,
                            std::size_t pad, std::size_t stride);

/// 2-D cross-correlation. `weight` is (kh, kw, c_in, c_out), `bias` is a
/// length c_out vector.
template <std::floating_point T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
              Conv2dOptions opt = {});

template <std::floating_point T>
Var<T> relu(const Var<T>& x);

/// Logistic function, computed in a form that never overflows.
template <std::floating_point T>
Var<T> sigmoid(const Var<T>& x);

/// Elementwise sum. Either operand may be (N, H, W, 1) against an
/// (N, H, W, C) partner, in which case it broadcasts over channels.
template <std::floating_point T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <std::floating_point T>
Var<T> sub(const Var<T>& a, const Var<T>& b);

/// Elementwise product with the same broadcasting rule as add.
template <std::floating_point T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

template <std::floating_point T>
Var<T> scale(const Var<T>& x, T factor);

template <std::floating_point T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

template <std::floating_point T>
Var<T> slice_channels(const Var<T>& x, std::size_t begin, std::size_t count);

/// Splits channels into [0, first) and [first, C); requires 0 < first < C.
template <std::floating_point T>
std::pair<Var<T>, Var<T>> split_channels(const Var<T>& x, std::size_t first);

/// Mean over channels, giving (N, H, W, 1).
template <std::floating_point T>
Var<T> channel_avg_pool(const Var<T>& x);

/// Max over channels, giving (N, H, W, 1). The gradient goes to the lowest
/// channel index among ties.
template <std::floating_point T>
Var<T> channel_max_pool(const Var<T>& x);

/// Column means: (N, H, W, C) -> (N, 1, W, C).
template <std::floating_point T>
Var<T> strip_pool_h(const Var<T>& x);

/// Row means: (N, H, W, C) -> (N, H, 1, C).
template <std::floating_point T>
Var<T> strip_pool_v(const Var<T>& x);

/// Copies a (N, 1, W, C), (N, H, 1, C) or (N, 1, 1, C) strip out to
/// (N, H, W, C).
template <std::floating_point T>
Var<T> expand(const Var<T>& strip, std::size_t height, std::size_t width);

/// Per-sample, per-channel normalization over H*W with population variance:
/// gamma * (x - mean) / sqrt(var + eps) + beta.
template <std::floating_point T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                     T eps);

/// Nearest-neighbour x2 spatial upsampling.
template <std::floating_point T>
Var<T> upsample_nearest2x(const Var<T>& x);

/// Sum of all elements as a (1, 1, 1, 1) scalar.
template <std::floating_point T>
Var<T> sum(const Var<T>& x);

template <std::floating_point T>
Var<T> mean(const Var<T>& x);

}  // namespace tanet::ops
