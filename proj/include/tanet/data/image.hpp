// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "tanet/tensor.hpp"

namespace tanet::data {

/// RGB image in [0, 1], stored as a (1, H, W, 3) tensor.
using Image = Tensor<double>;

Image make_image(std::size_t height, std::size_t width, double fill = 0.0);

/// Reads 8-bit RGB PNG or binary PPM (P6, maxval 255), chosen by extension.
/// Throws IoError on missing or malformed files.
Image read_image(const std::filesystem::path& path);

/// Writes 8-bit RGB; values are clamped to [0, 1] and rounded to the nearest
/// level. Parent directories must exist.
void write_image(const std::filesystem::path& path, const Image& image);

/// The values write_image followed by read_image would produce.
Image quantize8(const Image& image);

bool is_image_file(const std::filesystem::path& path);

/// Pads H and W up to multiples of `multiple` by mirror reflection (edge
/// pixel not repeated). Inputs narrower than the needed pad fall back to
/// periodic reflection.
template <std::floating_point T>
Tensor<T> reflect_pad(const Tensor<T>& image, std::size_t multiple);

template <std::floating_point T>
Tensor<T> crop(const Tensor<T>& image, std::size_t y0, std::size_t x0, std::size_t height,
               std::size_t width);

}  // namespace tanet::data
