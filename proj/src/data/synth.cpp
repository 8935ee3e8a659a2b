// SPDX-License-Identifier: Apache-2.0
#include "tanet/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "tanet/hash.hpp"
#include "tanet/nn/layers.hpp"

namespace tanet::data {

namespace {

using nn::uniform01;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

std::size_t uniform_count(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

void require_clean(const Image& clean, const char* op) {
  const Shape& s = clean.shape();
  if (s.batch() != 1 || s.channels() != 3) {
    throw ShapeError(std::string(op) + ": expected a (1, H, W, 3) image, got " + s.str());
  }
  for (double v : clean.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError(std::string(op) + ": clean image must lie in [0, 1]");
    }
  }
}

void require_kind(const DegradationSpec& spec, WeatherKind kind, const char* op) {
  if (spec.kind != kind) {
    throw UsageError(std::string(op) + " called with a " + std::string(to_string(spec.kind)) +
                     " spec");
  }
  spec.validate();
}

std::string_view profile_name(DepthProfile p) {
  switch (p) {
    case DepthProfile::kLinear: return "linear";
    case DepthProfile::kRadial: return "radial";
    case DepthProfile::kUniform: return "uniform";
  }
  return "?";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Separable Gaussian blur of a single-channel layer, clamped borders.
void gaussian_blur(Tensor<double>& layer, double sigma) {
  if (sigma <= 0.0) return;
  const auto radius = static_cast<long long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (long long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (auto& k : kernel) k /= total;

  const auto h = static_cast<long long>(layer.shape().height());
  const auto w = static_cast<long long>(layer.shape().width());
  std::vector<double> tmp(layer.size());
  auto at = [&](long long y, long long x) {
    return layer[static_cast<std::size_t>(y * w + x)];
  };
  for (long long y = 0; y < h; ++y) {
    for (long long x = 0; x < w; ++x) {
      double acc = 0;
      for (long long i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * at(y, std::clamp(x + i, 0LL, w - 1));
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  for (long long y = 0; y < h; ++y) {
    for (long long x = 0; x < w; ++x) {
      double acc = 0;
      for (long long i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               tmp[static_cast<std::size_t>(std::clamp(y + i, 0LL, h - 1) * w + x)];
      }
      layer[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = ax + t * dx - px, ey = ay + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

std::string_view to_string(WeatherKind kind) {
  switch (kind) {
    case WeatherKind::kHaze: return "haze";
    case WeatherKind::kRain: return "rain";
    case WeatherKind::kSnow: return "snow";
  }
  throw UsageError("unknown weather kind");
}

WeatherKind parse_kind(std::string_view text) {
  for (WeatherKind k : kAllKinds) {
    if (to_string(k) == text) return k;
  }
  throw UsageError("unknown weather kind '" + std::string(text) + "', expected haze|rain|snow");
}

void DegradationSpec::validate() const {
  switch (kind) {
    case WeatherKind::kHaze:
      if (!(haze.beta > 0.0) || !std::isfinite(haze.beta)) {
        throw ParameterError("haze beta must be a finite value > 0");
      }
      for (double a : haze.airlight) {
        if (!(a >= 0.7 && a <= 1.0)) throw ParameterError("haze airlight must lie in [0.7, 1]");
      }
      break;
    case WeatherKind::kRain:
      if (!(rain.length > 0.0)) throw ParameterError("rain length must be > 0");
      if (!(rain.angle_deg >= -30.0 && rain.angle_deg <= 30.0)) {
        throw ParameterError("rain angle must lie in [-30, 30] degrees");
      }
      if (!(rain.intensity >= 0.0 && rain.intensity <= 1.0)) {
        throw ParameterError("rain intensity must lie in [0, 1]");
      }
      if (!(rain.width > 0.0)) throw ParameterError("rain width must be > 0");
      break;
    case WeatherKind::kSnow:
      if (!(snow.radius_min > 0.0 && snow.radius_max >= snow.radius_min)) {
        throw ParameterError("snow radii must satisfy 0 < radius_min <= radius_max");
      }
      if (!(snow.transparency >= 0.0 && snow.transparency <= 1.0)) {
        throw ParameterError("snow transparency must lie in [0, 1]");
      }
      if (!(snow.blur_sigma >= 0.0)) throw ParameterError("snow blur sigma must be >= 0");
      break;
  }
}

std::string DegradationSpec::canonical() const {
  std::string out = "kind=" + std::string(to_string(kind));
  switch (kind) {
    case WeatherKind::kHaze:
      out += " beta=" + fmt(haze.beta) + " airlight=" + fmt(haze.airlight[0]) + "," +
             fmt(haze.airlight[1]) + "," + fmt(haze.airlight[2]) +
             " profile=" + std::string(profile_name(haze.profile));
      break;
    case WeatherKind::kRain:
      out += " streaks=" + std::to_string(rain.streak_count) + " length=" + fmt(rain.length) +
             " angle=" + fmt(rain.angle_deg) + " intensity=" + fmt(rain.intensity) +
             " width=" + fmt(rain.width);
      break;
    case WeatherKind::kSnow:
      out += " flakes=" + std::to_string(snow.flake_count) + " radius=" + fmt(snow.radius_min) +
             "," + fmt(snow.radius_max) + " transparency=" + fmt(snow.transparency) +
             " blur=" + fmt(snow.blur_sigma);
      break;
  }
  return out + " seed=" + std::to_string(seed);
}

std::uint64_t DegradationSpec::hash() const { return fnv1a(canonical()); }

Tensor<double> depth_map(std::size_t height, std::size_t width, DepthProfile profile) {
  Tensor<double> d(Shape(1, height, width, 1), 1.0);
  if (profile == DepthProfile::kUniform) return d;
  const double cy = 0.5 * static_cast<double>(height - 1);
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double max_r = std::sqrt(cy * cy + cx * cx);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double g;  // 0 near, 1 far
      if (profile == DepthProfile::kLinear) {
        g = height > 1 ? 1.0 - static_cast<double>(y) / static_cast<double>(height - 1) : 1.0;
      } else {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        g = max_r > 0 ? 1.0 - std::sqrt(dy * dy + dx * dx) / max_r : 1.0;
      }
      d.at(0, y, x, 0) = kNearDepth + (1.0 - kNearDepth) * g;
    }
  }
  return d;
}

Image synth_haze(const Image& clean, const DegradationSpec& spec) {
  require_clean(clean, "synth_haze");
  require_kind(spec, WeatherKind::kHaze, "synth_haze");
  const std::size_t h = clean.shape().height(), w = clean.shape().width();
  const Tensor<double> depth = depth_map(h, w, spec.haze.profile);
  Image out = clean;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double t = std::exp(-spec.haze.beta * depth.at(0, y, x, 0));
      for (std::size_t c = 0; c < 3; ++c) {
        const double a = spec.haze.airlight[c];
        out.at(0, y, x, c) = clean.at(0, y, x, c) * t + a * (1.0 - t);
      }
    }
  }
  return out;
}

Tensor<double> rain_layer(std::size_t height, std::size_t width, const DegradationSpec& spec) {
  require_kind(spec, WeatherKind::kRain, "rain_layer");
  Tensor<double> layer(Shape(1, height, width, 1), 0.0);
  std::mt19937_64 rng(spec.seed);
  const RainParams& p = spec.rain;
  const double theta = p.angle_deg * std::numbers::pi / 180.0;
  const double dx = std::sin(theta), dy = std::cos(theta);
  const double half = 0.5 * p.length;
  const double reach = 0.5 * p.width + 0.5;
  for (std::size_t s = 0; s < p.streak_count; ++s) {
    const double cx = uniform01(rng) * static_cast<double>(width);
    const double cy = uniform01(rng) * static_cast<double>(height);
    const double brightness = uniform(rng, 0.6, 1.0);
    const double ax = cx - half * dx, ay = cy - half * dy;
    const double bx = cx + half * dx, by = cy + half * dy;
    const auto x0 = static_cast<long long>(std::floor(std::min(ax, bx) - reach));
    const auto x1 = static_cast<long long>(std::ceil(std::max(ax, bx) + reach));
    const auto y0 = static_cast<long long>(std::floor(std::min(ay, by) - reach));
    const auto y1 = static_cast<long long>(std::ceil(std::max(ay, by) + reach));
    for (long long y = std::max(0LL, y0); y <= std::min<long long>(y1, height - 1); ++y) {
      for (long long x = std::max(0LL, x0); x <= std::min<long long>(x1, width - 1); ++x) {
        const double dist = segment_distance(x + 0.5, y + 0.5, ax, ay, bx, by);
        const double coverage = std::clamp(reach - dist, 0.0, 1.0);
        double& v = layer.at(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0);
        v = std::max(v, brightness * coverage);
      }
    }
  }
  return layer;
}

Image synth_rain(const Image& clean, const DegradationSpec& spec) {
  require_clean(clean, "synth_rain");
  const Tensor<double> layer = rain_layer(clean.shape().height(), clean.shape().width(), spec);
  Image out = clean;
  for (std::size_t p = 0; p < layer.size(); ++p) {
    const double s = spec.rain.intensity * layer[p];
    for (std::size_t c = 0; c < 3; ++c) {
      double& v = out[p * 3 + c];
      v = std::clamp(v + (1.0 - v) * s, 0.0, 1.0);
    }
  }
  return out;
}

Tensor<double> snow_layer(std::size_t height, std::size_t width, const DegradationSpec& spec) {
  require_kind(spec, WeatherKind::kSnow, "snow_layer");
  Tensor<double> layer(Shape(1, height, width, 1), 0.0);
  std::mt19937_64 rng(spec.seed);
  const SnowParams& p = spec.snow;
  for (std::size_t f = 0; f < p.flake_count; ++f) {
    const double cx = uniform01(rng) * static_cast<double>(width);
    const double cy = uniform01(rng) * static_cast<double>(height);
    const double r = uniform(rng, p.radius_min, p.radius_max);
    const double aspect = uniform(rng, 0.7, 1.0);
    const double phi = uniform01(rng) * std::numbers::pi;
    const double opacity = uniform(rng, 0.7, 1.0);
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const double reach = r + 1.0;
    for (long long y = std::max(0LL, static_cast<long long>(std::floor(cy - reach)));
         y <= std::min<long long>(static_cast<long long>(std::ceil(cy + reach)), height - 1); ++y) {
      for (long long x = std::max(0LL, static_cast<long long>(std::floor(cx - reach)));
           x <= std::min<long long>(static_cast<long long>(std::ceil(cx + reach)), width - 1);
           ++x) {
        const double ux = x + 0.5 - cx, uy = y + 0.5 - cy;
        const double u = ux * cphi + uy * sphi;
        const double v = -ux * sphi + uy * cphi;
        const double q = std::sqrt((u / r) * (u / r) + (v / (aspect * r)) * (v / (aspect * r)));
        const double coverage = std::clamp((1.0 - q) * r + 0.5, 0.0, 1.0);
        double& a = layer.at(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0);
        a = std::max(a, opacity * coverage);
      }
    }
  }
  gaussian_blur(layer, p.blur_sigma);
  return layer;
}

Image synth_snow(const Image& clean, const DegradationSpec& spec) {
  require_clean(clean, "synth_snow");
  const Tensor<double> layer = snow_layer(clean.shape().height(), clean.shape().width(), spec);
  Image out = clean;
  for (std::size_t p = 0; p < layer.size(); ++p) {
    const double a = spec.snow.transparency * std::clamp(layer[p], 0.0, 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
      double& v = out[p * 3 + c];
      v = std::clamp(v * (1.0 - a) + a, 0.0, 1.0);
    }
  }
  return out;
}

Image degrade(const Image& clean, const DegradationSpec& spec) {
  switch (spec.kind) {
    case WeatherKind::kHaze: return synth_haze(clean, spec);
    case WeatherKind::kRain: return synth_rain(clean, spec);
    case WeatherKind::kSnow: return synth_snow(clean, spec);
  }
  throw UsageError("unknown weather kind");
}

DegradationSpec random_spec(WeatherKind kind, std::mt19937_64& rng) {
  DegradationSpec spec;
  spec.kind = kind;
  switch (kind) {
    case WeatherKind::kHaze: {
      spec.haze.beta = uniform(rng, 0.8, 2.5);
      const double base = uniform(rng, 0.75, 0.95);
      for (auto& a : spec.haze.airlight) a = std::clamp(base + uniform(rng, -0.04, 0.04), 0.7, 1.0);
      spec.haze.profile = uniform01(rng) < 0.5 ? DepthProfile::kLinear : DepthProfile::kRadial;
      break;
    }
    case WeatherKind::kRain:
      spec.rain.streak_count = uniform_count(rng, 40, 120);
      spec.rain.length = uniform(rng, 8.0, 20.0);
      spec.rain.angle_deg = uniform(rng, -30.0, 30.0);
      spec.rain.intensity = uniform(rng, 0.5, 0.9);
      spec.rain.width = uniform(rng, 0.8, 1.6);
      break;
    case WeatherKind::kSnow:
      spec.snow.flake_count = uniform_count(rng, 40, 100);
      spec.snow.radius_min = uniform(rng, 0.8, 1.4);
      spec.snow.radius_max = spec.snow.radius_min + uniform(rng, 0.8, 2.0);
      spec.snow.transparency = uniform(rng, 0.6, 0.95);
      spec.snow.blur_sigma = uniform(rng, 0.3, 1.0);
      break;
  }
  spec.seed = rng();
  return spec;
}

}  // namespace tanet::data
