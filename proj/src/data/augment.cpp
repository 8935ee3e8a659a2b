// SPDX-License-Identifier: Apache-2.0
#include "tanet/data/augment.hpp"

#include "tanet/nn/layers.hpp"

namespace tanet::data {

namespace {

void require_fits(std::size_t height, std::size_t width, std::size_t crop) {
  if (crop == 0) throw ParameterError("crop size must be >= 1");
  if (height < crop || width < crop) {
    throw ShapeError("image " + std::to_string(height) + "x" + std::to_string(width) +
                     " is smaller than the " + std::to_string(crop) +
                     " crop; resize the images or lower the crop size");
  }
}

}  // namespace

SpatialTransform sample_transform(std::size_t height, std::size_t width, std::size_t crop,
                                  std::mt19937_64& rng) {
  require_fits(height, width, crop);
  SpatialTransform t;
  t.size = crop;
  t.y0 = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(height - crop + 1));
  t.x0 = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(width - crop + 1));
  t.flip = nn::uniform01(rng) < 0.5;
  t.rotations = static_cast<unsigned>(nn::uniform01(rng) * 4.0);
  return t;
}

template <std::floating_point T>
Tensor<T> apply_transform(const Tensor<T>& image, const SpatialTransform& t) {
  const Shape& s = image.shape();
  require_fits(s.height(), s.width(), t.size);
  if (t.y0 + t.size > s.height() || t.x0 + t.size > s.width()) {
    throw ShapeError("crop window exceeds image " + s.str());
  }
  const std::size_t n = t.size;
  Tensor<T> out(Shape(s.batch(), n, n, s.channels()));
  const unsigned rot = t.rotations % 4;
  for (std::size_t b = 0; b < s.batch(); ++b) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        // Undo the rotation, then the flip, to find the crop-space source.
        std::size_t sy = y, sx = x;
        switch (rot) {
          case 1: sy = x; sx = n - 1 - y; break;
          case 2: sy = n - 1 - y; sx = n - 1 - x; break;
          case 3: sy = n - 1 - x; sx = y; break;
          default: break;
        }
        if (t.flip) sx = n - 1 - sx;
        for (std::size_t c = 0; c < s.channels(); ++c) {
          out.at(b, y, x, c) = image.at(b, t.y0 + sy, t.x0 + sx, c);
        }
      }
    }
  }
  return out;
}

std::pair<Image, Image> augment(const Image& degraded, const Image& clean, std::size_t crop,
                                std::mt19937_64& rng) {
  require_same_shape(degraded.shape(), clean.shape(), "augment");
  const SpatialTransform t = sample_transform(clean.shape().height(), clean.shape().width(), crop, rng);
  return {apply_transform(degraded, t), apply_transform(clean, t)};
}

template Tensor<float> apply_transform(const Tensor<float>&, const SpatialTransform&);
template Tensor<double> apply_transform(const Tensor<double>&, const SpatialTransform&);

}  // namespace tanet::data
