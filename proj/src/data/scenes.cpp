// SPDX-License-Identifier: Apache-2.0
#include "tanet/data/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "tanet/nn/layers.hpp"

namespace tanet::data {

namespace {

using Rgb = std::array<double, 3>;
using nn::uniform01;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

Rgb random_color(std::mt19937_64& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

void put(Image& img, std::size_t y, std::size_t x, const Rgb& c) {
  for (std::size_t k = 0; k < 3; ++k) img.at(0, y, x, k) = c[k];
}

// Bilinear interpolation of a coarse random grid.
class ValueNoise {
 public:
  ValueNoise(std::size_t cells, std::mt19937_64& rng) : cells_(cells), grid_((cells + 1) * (cells + 1)) {
    for (auto& v : grid_) v = uniform01(rng) * 2.0 - 1.0;
  }
  double operator()(double u, double v) const {
    const double fx = u * static_cast<double>(cells_), fy = v * static_cast<double>(cells_);
    const auto ix = std::min(static_cast<std::size_t>(fx), cells_ - 1);
    const auto iy = std::min(static_cast<std::size_t>(fy), cells_ - 1);
    const double tx = fx - static_cast<double>(ix), ty = fy - static_cast<double>(iy);
    auto g = [&](std::size_t y, std::size_t x) { return grid_[y * (cells_ + 1) + x]; };
    const double top = g(iy, ix) * (1 - tx) + g(iy, ix + 1) * tx;
    const double bottom = g(iy + 1, ix) * (1 - tx) + g(iy + 1, ix + 1) * tx;
    return top * (1 - ty) + bottom * ty;
  }

 private:
  std::size_t cells_;
  std::vector<double> grid_;
};

}  // namespace

Image generate_scene(std::size_t height, std::size_t width, std::uint64_t seed) {
  if (height == 0 || width == 0) throw ShapeError("generate_scene: empty size");
  std::mt19937_64 rng(seed);
  Image img = make_image(height, width);
  const double H = static_cast<double>(height), W = static_cast<double>(width);

  const Rgb sky_top = {uniform(rng, 0.2, 0.5), uniform(rng, 0.35, 0.65), uniform(rng, 0.6, 0.95)};
  const Rgb sky_low = mix(sky_top, Rgb{0.9, 0.9, 0.85}, uniform(rng, 0.3, 0.8));
  const Rgb ground_near = random_color(rng, 0.1, 0.45);
  const Rgb ground_far = mix(ground_near, sky_low, uniform(rng, 0.2, 0.5));
  const double horizon = uniform(rng, 0.3, 0.6) * H;
  const double stripe_freq = uniform(rng, 4.0, 14.0);
  const double stripe_phase = uniform(rng, 0.0, 6.28);

  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double fy = static_cast<double>(y);
      if (fy < horizon) {
        put(img, y, x, mix(sky_top, sky_low, fy / horizon));
      } else {
        const double t = (fy - horizon) / std::max(1.0, H - horizon);
        Rgb c = mix(ground_far, ground_near, t);
        const double stripe = 0.06 * std::sin(stripe_freq * t * 6.28 + stripe_phase +
                                              static_cast<double>(x) / W * 3.0);
        for (auto& v : c) v += stripe;
        put(img, y, x, c);
      }
    }
  }

  // Buildings standing on the horizon.
  const auto buildings = 2 + static_cast<std::size_t>(uniform01(rng) * 5);
  for (std::size_t b = 0; b < buildings; ++b) {
    const double bw = uniform(rng, 0.08, 0.25) * W;
    const double bh = uniform(rng, 0.15, 0.45) * H;
    const double x0 = uniform(rng, -0.1, 0.95) * W;
    const double y1 = horizon + uniform(rng, 0.0, 0.15) * H;
    const Rgb wall = random_color(rng, 0.15, 0.8);
    const Rgb window = uniform01(rng) < 0.5 ? random_color(rng, 0.05, 0.25) : random_color(rng, 0.75, 0.95);
    const double pitch = uniform(rng, 3.0, 7.0);
    for (std::size_t y = 0; y < height; ++y) {
      const double fy = static_cast<double>(y);
      if (fy < y1 - bh || fy >= y1) continue;
      for (std::size_t x = 0; x < width; ++x) {
        const double fx = static_cast<double>(x);
        if (fx < x0 || fx >= x0 + bw) continue;
        const double lx = std::fmod(fx - x0, pitch), ly = std::fmod(fy - (y1 - bh), pitch);
        const bool is_window = lx > 1.0 && lx < pitch - 1.0 && ly > 1.0 && ly < pitch - 1.0 &&
                               fx - x0 > 1.0 && x0 + bw - fx > 1.0;
        put(img, y, x, is_window ? window : wall);
      }
    }
  }

  // Round canopies and a sun disc, anti-aliased at the rim.
  const auto discs = 1 + static_cast<std::size_t>(uniform01(rng) * 5);
  for (std::size_t d = 0; d < discs; ++d) {
    const bool sun = d == 0 && uniform01(rng) < 0.4;
    const double r = (sun ? uniform(rng, 0.04, 0.08) : uniform(rng, 0.06, 0.16)) * W;
    const double cx = uniform01(rng) * W;
    const double cy = sun ? uniform(rng, 0.05, 0.25) * H : horizon + uniform(rng, -0.1, 0.3) * H;
    const Rgb color = sun ? Rgb{0.98, 0.92, 0.7} : Rgb{uniform(rng, 0.05, 0.3), uniform(rng, 0.3, 0.6),
                                                      uniform(rng, 0.05, 0.3)};
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx, dy = static_cast<double>(y) + 0.5 - cy;
        const double cover = std::clamp(r - std::sqrt(dx * dx + dy * dy) + 0.5, 0.0, 1.0);
        if (cover <= 0.0) continue;
        for (std::size_t k = 0; k < 3; ++k) {
          double& v = img.at(0, y, x, k);
          v = v * (1.0 - cover) + color[k] * cover;
        }
      }
    }
  }

  const ValueNoise coarse(4, rng), fine(16, rng);
  const double amp = uniform(rng, 0.03, 0.08);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / W, v = static_cast<double>(y) / H;
      const double n = amp * coarse(u, v) + 0.5 * amp * fine(u, v);
      for (std::size_t k = 0; k < 3; ++k) {
        double& p = img.at(0, y, x, k);
        p = std::clamp(p + n, 0.0, 1.0);
      }
    }
  }
  return img;
}

std::vector<std::filesystem::path> write_scenes(const std::filesystem::path& dir,
                                                std::size_t count, std::size_t size,
                                                std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::mt19937_64 rng(seed);
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04zu.png", i);
    paths.push_back(dir / name);
    write_image(paths.back(), generate_scene(size, size, rng()));
  }
  return paths;
}

}  // namespace tanet::data
