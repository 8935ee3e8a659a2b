// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "tanet/data/image.hpp"

namespace tanet::data {

enum class WeatherKind : std::uint8_t { kHaze, kRain, kSnow };

inline constexpr std::array<WeatherKind, 3> kAllKinds = {WeatherKind::kHaze, WeatherKind::kRain,
                                                         WeatherKind::kSnow};

std::string_view to_string(WeatherKind kind);
/// "haze", "rain" or "snow"; throws UsageError otherwise.
WeatherKind parse_kind(std::string_view text);

enum class DepthProfile : std::uint8_t {
  /// Far at the top row, near at the bottom row.
  kLinear,
  /// Far at the image centre, near at the corners.
  kRadial,
  /// Constant depth 1: spatially uniform transmission.
  kUniform,
};

struct HazeParams {
  double beta = 1.0;
  std::array<double, 3> airlight = {0.9, 0.9, 0.9};
  DepthProfile profile = DepthProfile::kLinear;
};

struct RainParams {
  std::size_t streak_count = 60;
  double length = 12.0;     // px
  double angle_deg = 0.0;   // from vertical, positive leans right going down
  double intensity = 0.7;   // (0, 1]
  double width = 1.0;       // px, full width of the streak core
};

struct SnowParams {
  std::size_t flake_count = 50;
  double radius_min = 1.0;  // px
  double radius_max = 2.5;  // px
  double transparency = 0.8;
  double blur_sigma = 0.6;  // px, 0 disables the blur
};

/// One synthetic corruption. Only the parameter block matching `kind` is
/// used; the others keep their defaults and do not enter the hash.
struct DegradationSpec {
  WeatherKind kind = WeatherKind::kHaze;
  HazeParams haze;
  RainParams rain;
  SnowParams snow;
  std::uint64_t seed = 0;

  /// Throws ParameterError when a field of the active block is out of range.
  void validate() const;
  /// Canonical one-line text form of the active fields.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Depth values in [kNearDepth, 1]. Depth never reaches 0 so that strong
/// scattering drives every pixel to the airlight.
inline constexpr double kNearDepth = 1.0 / 16.0;
Tensor<double> depth_map(std::size_t height, std::size_t width, DepthProfile profile);

/// I = J t + A (1 - t), t = exp(-beta d).
Image synth_haze(const Image& clean, const DegradationSpec& spec);
/// Screen-blends a layer of anti-aliased oriented streaks.
Image synth_rain(const Image& clean, const DegradationSpec& spec);
/// Alpha-composites blurred white ellipses.
Image synth_snow(const Image& clean, const DegradationSpec& spec);
/// Dispatches on spec.kind.
Image degrade(const Image& clean, const DegradationSpec& spec);

/// The (1, H, W, 1) streak layer synth_rain blends, in [0, 1].
Tensor<double> rain_layer(std::size_t height, std::size_t width, const DegradationSpec& spec);
/// The (1, H, W, 1) snow opacity layer synth_snow composites, in [0, 1].
Tensor<double> snow_layer(std::size_t height, std::size_t width, const DegradationSpec& spec);

/// Draws a spec with randomized parameters in the dataset ranges.
DegradationSpec random_spec(WeatherKind kind, std::mt19937_64& rng);

}  // namespace tanet::data
