// SPDX-License-Identifier: Apache-2.0
#include "tanet/losses.hpp"

#include <cmath>

#include "tanet/fft.hpp"
#include "tanet/ops.hpp"

namespace tanet::losses {

void LossConfig::validate() const {
  if (!(epsilon > 0.0)) throw ParameterError("loss epsilon must be > 0");
  if (!(lambda_fft >= 0.0)) throw ParameterError("lambda_fft must be >= 0");
}

template <std::floating_point T>
Var<T> charbonnier(const Var<T>& restored, const Var<T>& target, T epsilon) {
  require_same_shape(restored.shape(), target.shape(), "charbonnier");
  if (!(epsilon > T(0))) throw ParameterError("charbonnier: epsilon must be > 0");
  const auto& o = restored.value();
  const auto& g = target.value();
  const std::size_t count = o.size();
  const T eps2 = epsilon * epsilon;
  // Per-element root, reused as the backward denominator. The mean is
  // accumulated as eps + mean(root - eps), with root - eps written as
  // d^2 / (root + eps) so equal inputs give exactly eps.
  std::vector<T> root(count);
  T acc = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const T d = o[i] - g[i];
    root[i] = std::sqrt(d * d + eps2);
    acc += d * d / (root[i] + epsilon);
  }
  const T inv_count = T(1) / static_cast<T>(count);
  return Tape<T>::emit(
      "charbonnier", Tensor<T>(Shape(1, 1, 1, 1), epsilon + acc * inv_count), {restored, target},
      [restored, target, root = std::move(root), inv_count](
          const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
        const auto& o = restored.value();
        const auto& g = target.value();
        for (std::size_t i = 0; i < root.size(); ++i) {
          const T d = gy[0] * inv_count * (o[i] - g[i]) / root[i];
          if (grads[0]) (*grads[0])[i] += d;
          if (grads[1]) (*grads[1])[i] -= d;
        }
      });
}

template <std::floating_point T>
Var<T> charbonnier_global(const Var<T>& restored, const Var<T>& target, T epsilon) {
  require_same_shape(restored.shape(), target.shape(), "charbonnier_global");
  if (!(epsilon > T(0))) throw ParameterError("charbonnier: epsilon must be > 0");
  const auto& o = restored.value();
  const auto& g = target.value();
  T sq = 0;
  for (std::size_t i = 0; i < o.size(); ++i) sq += (o[i] - g[i]) * (o[i] - g[i]);
  const T norm = std::sqrt(sq);
  const T loss = std::sqrt(norm + epsilon * epsilon);
  return Tape<T>::emit(
      "charbonnier_global", Tensor<T>(Shape(1, 1, 1, 1), loss), {restored, target},
      [restored, target, norm, loss](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
        // d/dO sqrt(|D| + e^2) = D / (2 |D| sqrt(|D| + e^2)); subgradient 0 at D = 0.
        if (norm == T(0)) return;
        const auto& o = restored.value();
        const auto& g = target.value();
        const T k = gy[0] / (T(2) * norm * loss);
        for (std::size_t i = 0; i < o.size(); ++i) {
          const T d = k * (o[i] - g[i]);
          if (grads[0]) (*grads[0])[i] += d;
          if (grads[1]) (*grads[1])[i] -= d;
        }
      });
}

namespace {

// Bins below `floor` are treated as exact zeros (subgradient 0). For real
// input the DC and Nyquist imaginary parts are structurally zero but come out
// of the transform as rounding noise.
template <typename T>
T sign_of(T v, T floor) {
  return v > floor ? T(1) : (v < -floor ? T(-1) : T(0));
}

}  // namespace

template <std::floating_point T>
Var<T> fft_loss(const Var<T>& restored, const Var<T>& target) {
  require_same_shape(restored.shape(), target.shape(), "fft_loss");
  // The transform is linear, so transforming the difference equals the
  // difference of transforms.
  Tensor<T> diff = restored.value();
  const auto& g = target.value();
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= g[i];
  ComplexGrid<T> spec = fft2d(diff);
  const std::size_t bins = spec.re.size();
  T acc = 0;
  T magnitude = 0;
  for (T v : diff.data()) magnitude += std::abs(v);
  const T floor = T(64) * std::numeric_limits<T>::epsilon() * magnitude;
  ComplexGrid<T> signs(spec.shape);
  for (std::size_t k = 0; k < bins; ++k) {
    acc += std::abs(spec.re[k]) + std::abs(spec.im[k]);
    signs.re[k] = sign_of(spec.re[k], floor);
    // Conjugated so the forward kernel can be reused for the adjoint.
    signs.im[k] = -sign_of(spec.im[k], floor);
  }
  if (KinkProbe::enabled()) {
    for (std::size_t k = 0; k < bins; ++k) {
      KinkProbe::record(static_cast<std::uint64_t>(signs.re[k] + 1) * 4 +
                        static_cast<std::uint64_t>(signs.im[k] + 1));
    }
  }
  const T inv_bins = T(1) / static_cast<T>(bins);
  return Tape<T>::emit(
      "fft_loss", Tensor<T>(Shape(1, 1, 1, 1), acc * inv_bins), {restored, target},
      [signs = std::move(signs), inv_bins](const Tensor<T>& gy,
                                           std::span<Tensor<T>*> grads) mutable {
        // dL/dx[n] = sum_k a_k cos(theta) - b_k sin(theta) = Re(DFT(a - i b))[n].
        ComplexGrid<T> adj = signs;
        dft2d_inplace(adj, -1);
        const T k = gy[0] * inv_bins;
        for (std::size_t i = 0; i < adj.re.size(); ++i) {
          const T d = k * adj.re[i];
          if (grads[0]) (*grads[0])[i] += d;
          if (grads[1]) (*grads[1])[i] -= d;
        }
      });
}

template <std::floating_point T>
Var<T> total_loss(const Var<T>& restored, const Var<T>& target,
                  const LossConfig& config) {
  config.validate();
  const T eps = static_cast<T>(config.epsilon);
  Var<T> base = config.charbonnier_form == CharbonnierForm::kPerElement
                    ? charbonnier(restored, target, eps)
                    : charbonnier_global(restored, target, eps);
  if (!config.fft_enabled) return base;
  return ops::add(base, ops::scale(fft_loss(restored, target),
                                   static_cast<T>(config.lambda_fft)));
}

template <std::floating_point T>
double psnr(const Tensor<T>& restored, const Tensor<T>& target, double peak) {
  require_same_shape(restored.shape(), target.shape(), "psnr");
  double sq = 0.0;
  for (std::size_t i = 0; i < restored.size(); ++i) {
    const double d = static_cast<double>(restored[i]) - static_cast<double>(target[i]);
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(restored.size());
  if (mse == 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr_for_display(double db) { return db > kPsnrDisplayCap ? kPsnrDisplayCap : db; }

#define TANET_INSTANTIATE_LOSSES(T)                                         \
  template Var<T> charbonnier(const Var<T>&, const Var<T>&, T);             \
  template Var<T> charbonnier_global(const Var<T>&, const Var<T>&, T);      \
  template Var<T> fft_loss(const Var<T>&, const Var<T>&);                   \
  template Var<T> total_loss(const Var<T>&, const Var<T>&, const LossConfig&); \
  template double psnr(const Tensor<T>&, const Tensor<T>&, double);

TANET_INSTANTIATE_LOSSES(float)
TANET_INSTANTIATE_LOSSES(double)

#undef TANET_INSTANTIATE_LOSSES

}  // namespace tanet::losses
