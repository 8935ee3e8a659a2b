// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tanet/data/image.hpp"

namespace tanet::data {

/// Procedural outdoor-like scene: sky and ground gradients, block buildings
/// with window grids, round canopies and low-frequency texture. Deterministic
/// in `seed`; values in [0, 1].
Image generate_scene(std::size_t height, std::size_t width, std::uint64_t seed);

/// Writes `count` scenes as scene_NNNN.png into `dir` (created if needed)
/// and returns the paths in order.
std::vector<std::filesystem::path> write_scenes(const std::filesystem::path& dir,
                                                std::size_t count, std::size_t size,
                                                std::uint64_t seed);

}  // namespace tanet::data
