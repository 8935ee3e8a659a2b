// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <utility>

#include "tanet/data/image.hpp"

namespace tanet::data {

/// Square crop at (y0, x0), then an optional horizontal flip, then
/// `rotations` counter-clockwise quarter turns.
struct SpatialTransform {
  std::size_t y0 = 0;
  std::size_t x0 = 0;
  std::size_t size = 0;
  bool flip = false;
  unsigned rotations = 0;

  bool operator==(const SpatialTransform&) const = default;
};

/// Throws ShapeError, advising a resize, when the image is smaller than crop.
SpatialTransform sample_transform(std::size_t height, std::size_t width, std::size_t crop,
                                  std::mt19937_64& rng);

/// Applies `t` to every sample of a (N, H, W, C) tensor.
template <std::floating_point T>
Tensor<T> apply_transform(const Tensor<T>& image, const SpatialTransform& t);

/// One sampled transform applied identically to both images of the pair.
std::pair<Image, Image> augment(const Image& degraded, const Image& clean, std::size_t crop,
                                std::mt19937_64& rng);

}  // namespace tanet::data
