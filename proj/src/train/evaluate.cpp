// SPDX-License-Identifier: Apache-2.0
#include "tanet/train/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "tanet/data/image.hpp"
#include "tanet/losses.hpp"

namespace tanet::train {

namespace {

std::string fixed(double v, int precision = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

template <std::floating_point T>
Tensor<T> restore_image(const nn::TANetModel<T>& model, const Tensor<T>& image) {
  const Shape& s = image.shape();
  if (s.height() % 4 == 0 && s.width() % 4 == 0) return model.restore(image);
  const Tensor<T> padded = data::reflect_pad(image, 4);
  return data::crop(model.restore(padded), 0, 0, s.height(), s.width());
}

template <std::floating_point T>
EvalReport evaluate(const nn::TANetModel<T>& model, const std::vector<data::Sample>& samples,
                    const EvalOptions& options) {
  if (samples.empty()) throw UsageError("evaluation set is empty");
  EvalReport report;
  report.param_count = model.param_count();
  std::array<double, 3> restored_sum{}, degraded_sum{};
  std::array<std::size_t, 3> counts{};
  for (const auto& sample : samples) {
    const auto k = static_cast<std::size_t>(sample.kind);
    const Tensor<T> degraded = tensor_cast<T>(sample.degraded);
    const Tensor<T> clean = tensor_cast<T>(sample.clean);
    restored_sum[k] += losses::psnr(restore_image(model, degraded), clean);
    degraded_sum[k] += losses::psnr(degraded, clean);
    ++counts[k];
  }
  std::size_t present = 0;
  for (data::WeatherKind kind : data::kAllKinds) {
    const auto k = static_cast<std::size_t>(kind);
    if (counts[k] == 0) {
      report.warnings.push_back("no " + std::string(data::to_string(kind)) +
                                " pairs; average taken over the kinds present");
      continue;
    }
    const double n = static_cast<double>(counts[k]);
    report.kinds[k] = KindScore{counts[k], restored_sum[k] / n, degraded_sum[k] / n};
    report.average_restored += report.kinds[k]->psnr_restored;
    report.average_degraded += report.kinds[k]->psnr_degraded;
    ++present;
  }
  report.average_restored /= static_cast<double>(present);
  report.average_degraded /= static_cast<double>(present);

  if (options.time_inference && options.timing_runs > 0) {
    Tensor<T> probe(Shape(1, 256, 256, 3));
    for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = static_cast<T>((i * 7919 % 1000) / 1000.0);
    std::vector<double> ms;
    for (std::size_t r = 0; r < options.timing_runs; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)restore_image(model, probe);
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    report.ms_per_image_256 = ms[ms.size() / 2];
  }
  return report;
}

std::string format_eval_table(const EvalReport& report) {
  const std::size_t w = 14;
  std::string out = pad_left("kind", 8) + pad_left("psnr_restored", w + 1) +
                    pad_left("psnr_degraded", w + 1) + pad_left("delta", w) + "\n";
  for (data::WeatherKind kind : data::kAllKinds) {
    const auto& score = report.kinds[static_cast<std::size_t>(kind)];
    if (!score) {
      out += pad_left(std::string(data::to_string(kind)), 8) + pad_left("absent", w + 1) + "\n";
      continue;
    }
    out += pad_left(std::string(data::to_string(kind)), 8) + pad_left(fixed(score->psnr_restored), w + 1) +
           pad_left(fixed(score->psnr_degraded), w + 1) + pad_left(fixed(score->delta()), w) + "\n";
  }
  out += pad_left("average", 8) + pad_left(fixed(report.average_restored), w + 1) +
         pad_left(fixed(report.average_degraded), w + 1) + pad_left(fixed(report.average_delta()), w) +
         "\n";
  out += "params " + std::to_string(report.param_count) + "\n";
  if (report.ms_per_image_256) out += "ms_per_image_256x256 " + fixed(*report.ms_per_image_256, 2) + "\n";
  for (const auto& warning : report.warnings) out += "warning: " + warning + "\n";
  return out;
}

std::string format_eval_csv(const EvalReport& report) {
  std::string out = "kind,psnr_restored,psnr_degraded,delta\n";
  for (data::WeatherKind kind : data::kAllKinds) {
    const auto& score = report.kinds[static_cast<std::size_t>(kind)];
    if (!score) continue;
    out += std::string(data::to_string(kind)) + "," + fixed(score->psnr_restored, 6) + "," +
           fixed(score->psnr_degraded, 6) + "," + fixed(score->delta(), 6) + "\n";
  }
  out += "average," + fixed(report.average_restored, 6) + "," + fixed(report.average_degraded, 6) +
         "," + fixed(report.average_delta(), 6) + "\n";
  return out;
}

template Tensor<float> restore_image(const nn::TANetModel<float>&, const Tensor<float>&);
template Tensor<double> restore_image(const nn::TANetModel<double>&, const Tensor<double>&);
template EvalReport evaluate(const nn::TANetModel<float>&, const std::vector<data::Sample>&,
                             const EvalOptions&);
template EvalReport evaluate(const nn::TANetModel<double>&, const std::vector<data::Sample>&,
                             const EvalOptions&);

}  // namespace tanet::train
