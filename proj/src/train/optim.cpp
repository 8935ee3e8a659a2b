// SPDX-License-Identifier: Apache-2.0
#include "tanet/train/optim.hpp"

#include <cmath>
#include <numbers>

namespace tanet::train {

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double lr_min) {
  if (!(lr_min > 0.0 && lr0 > lr_min)) {
    throw ParameterError("cosine_lr needs lr0 > lr_min > 0");
  }
  if (total_steps == 0) throw ParameterError("cosine_lr needs total_steps >= 1");
  if (step >= total_steps) return lr_min;
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

template <std::floating_point T>
void adam_step(const std::vector<nn::NamedParameter<T>>& params, TrainState<T>& state, double lr) {
  for (const auto& p : params) {
    if (p.var.has_grad() && !p.var.grad().all_finite()) {
      throw NumericError("non-finite gradient in parameter '" + p.name + "' at step " +
                         std::to_string(state.step));
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.var.shape());
      state.v.emplace_back(p.var.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw UsageError("optimizer state tracks " + std::to_string(state.m.size()) +
                     " tensors but " + std::to_string(params.size()) + " parameters were given");
  }

  const AdamConfig& a = state.adam;
  const double t = static_cast<double>(state.step + 1);
  const T b1 = static_cast<T>(a.beta1), b2 = static_cast<T>(a.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(a.beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(a.beta2, t)));
  const T step_size = static_cast<T>(lr);
  const T eps = static_cast<T>(a.eps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Var<T> var = params[i].var;
    Tensor<T>& value = var.mutable_value();
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    require_same_shape(m.shape(), value.shape(), params[i].name.c_str());
    const bool has_grad = var.has_grad();
    const T* g = has_grad ? var.grad().raw() : nullptr;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const T gk = has_grad ? g[k] : T(0);
      m[k] = b1 * m[k] + (T(1) - b1) * gk;
      v[k] = b2 * v[k] + (T(1) - b2) * gk * gk;
      value[k] -= step_size * (m[k] * c1) / (std::sqrt(v[k] * c2) + eps);
    }
  }
  ++state.step;
}

template void adam_step(const std::vector<nn::NamedParameter<float>>&, TrainState<float>&, double);
template void adam_step(const std::vector<nn::NamedParameter<double>>&, TrainState<double>&, double);

}  // namespace tanet::train
