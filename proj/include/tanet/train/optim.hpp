// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "tanet/losses.hpp"
#include "tanet/nn/layers.hpp"

namespace tanet::train {

/// lr_min + (lr0 - lr_min)(1 + cos(pi step / total_steps)) / 2, and lr_min
/// for any step past the end. Throws ParameterError unless
/// lr0 > lr_min > 0 and total_steps >= 1.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double lr_min);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Optimizer state. `step` counts completed updates; m and v are allocated
/// on the first update and mirror the parameter shapes.
template <std::floating_point T>
struct TrainState {
  std::size_t step = 0;
  std::size_t total_steps = 0;
  AdamConfig adam;
  double lr0 = 1e-4;
  double lr_min = 1e-7;
  std::uint64_t seed = 0;
  losses::LossConfig loss;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
};

/// One bias-corrected Adam update at learning rate `lr` using the gradients
/// accumulated on `params`; parameters without a gradient see zero. Throws
/// NumericError naming the first parameter with a non-finite gradient,
/// before anything is modified.
template <std::floating_point T>
void adam_step(const std::vector<nn::NamedParameter<T>>& params, TrainState<T>& state, double lr);

}  // namespace tanet::train
