// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>

#include "tanet/autograd.hpp"

namespace tanet::losses {

enum class CharbonnierForm {
  /// mean over elements of sqrt(d^2 + eps^2)
  kPerElement,
  /// sqrt(||O - G||_2 + eps^2) over the whole tensor
  kGlobal,
};

struct LossConfig {
  double epsilon = 1e-3;
  double lambda_fft = 1e-2;
  bool fft_enabled = true;
  CharbonnierForm charbonnier_form = CharbonnierForm::kPerElement;

  /// Throws ParameterError unless epsilon > 0 and lambda_fft >= 0.
  void validate() const;
};

template <std::floating_point T>
Var<T> charbonnier(const Var<T>& restored, const Var<T>& target, T epsilon);

/// Single-root variant, kept for A/B comparison against the per-element form.
template <std::floating_point T>
Var<T> charbonnier_global(const Var<T>& restored, const Var<T>& target, T epsilon);

/// Mean over all frequency bins of |Re D| + |Im D|, D = fft2d(o) - fft2d(g).
template <std::floating_point T>
Var<T> fft_loss(const Var<T>& restored, const Var<T>& target);

/// charbonnier + lambda * fft_loss, or charbonnier alone when the FFT term
/// is disabled.
template <std::floating_point T>
Var<T> total_loss(const Var<T>& restored, const Var<T>& target,
                  const LossConfig& config);

/// Returned by psnr when the two images are identical.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();
/// Display cap for identical images in rendered tables.
inline constexpr double kPsnrDisplayCap = 100.0;

/// 10 log10(peak^2 / MSE) in dB; +inf when MSE == 0.
template <std::floating_point T>
double psnr(const Tensor<T>& restored, const Tensor<T>& target, double peak = 1.0);

double psnr_for_display(double db);

}  // namespace tanet::losses
