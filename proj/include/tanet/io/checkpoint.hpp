// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tanet/nn/model.hpp"

namespace tanet::io {

inline constexpr char kCheckpointMagic[4] = {'T', 'A', 'N', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout, all integers little-endian:
///   "TANT" | u32 version
///   | u32 base_channels | u32 num_tabs | u32 downscale_stages
///   | u32 in_channels | u32 out_channels | u8 use_global_residual
///   | u64 seed | u8 variant | u32 record_count
///   | records: u32 name_len | name | u32 rank | u32 dims[rank] | f32 payload
///   | u64 FNV-1a of every preceding byte
/// Bias-like (1, 1, 1, n) tensors are stored as rank 1, kernels as rank 4.
template <std::floating_point T>
std::vector<unsigned char> serialize_checkpoint(const nn::TANetModel<T>& model);

template <std::floating_point T>
nn::TANetModel<T> deserialize_checkpoint(const std::vector<unsigned char>& bytes);

/// Throws IoError when the file cannot be written.
template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& path, const nn::TANetModel<T>& model);

/// Throws CheckpointError on a missing file, bad magic or version, checksum
/// mismatch, truncation, or records that do not match the stored config.
template <std::floating_point T>
nn::TANetModel<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace tanet::io
