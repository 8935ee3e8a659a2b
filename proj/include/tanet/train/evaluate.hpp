// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tanet/data/dataset.hpp"
#include "tanet/nn/model.hpp"

namespace tanet::train {

/// Restores an image of any size: reflection-pads H and W to multiples of 4,
/// runs the model and crops back to the input size.
template <std::floating_point T>
Tensor<T> restore_image(const nn::TANetModel<T>& model, const Tensor<T>& image);

struct KindScore {
  std::size_t count = 0;
  double psnr_restored = 0;  // mean over images, dB
  double psnr_degraded = 0;  // identity baseline, dB
  double delta() const { return psnr_restored - psnr_degraded; }
};

struct EvalReport {
  std::array<std::optional<KindScore>, 3> kinds;  // indexed by WeatherKind
  /// Arithmetic means over the kinds present.
  double average_restored = 0;
  double average_degraded = 0;
  std::size_t param_count = 0;
  /// Median wall time of one 256x256 restore, when measured.
  std::optional<double> ms_per_image_256;
  std::vector<std::string> warnings;

  double average_delta() const { return average_restored - average_degraded; }
};

struct EvalOptions {
  bool time_inference = true;
  std::size_t timing_runs = 3;
};

/// Per-kind mean PSNR of restored and degraded images against the clean
/// ones, on full images in the model's precision. Kinds with no pairs are
/// reported absent with a warning. Throws UsageError on an empty set.
template <std::floating_point T>
EvalReport evaluate(const nn::TANetModel<T>& model, const std::vector<data::Sample>& samples,
                    const EvalOptions& options = {});

/// Aligned columns: kind, psnr_restored, psnr_degraded, delta; then the
/// average row, parameter count and timing.
std::string format_eval_table(const EvalReport& report);
std::string format_eval_csv(const EvalReport& report);

}  // namespace tanet::train
