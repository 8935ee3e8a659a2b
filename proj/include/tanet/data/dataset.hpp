// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tanet/data/synth.hpp"
#include "tanet/nn/layers.hpp"

namespace tanet::data {

struct ManifestEntry {
  WeatherKind kind = WeatherKind::kHaze;
  std::filesystem::path clean;
  std::filesystem::path degraded;
  std::string spec_hash;  // 16 hex digits

  bool operator==(const ManifestEntry&) const = default;
};

using KindCounts = std::array<std::size_t, 3>;
KindCounts count_kinds(const std::vector<ManifestEntry>& entries);

struct DatasetManifest {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
};

struct DatasetOptions {
  std::size_t per_kind = 100;
  /// Fraction of clean images whose pairs go to the training split.
  double split_ratio = 0.9;
  std::uint64_t seed = 0;
};

/// Synthesizes per_kind degraded pairs of every weather kind from the images
/// in `clean_dir` into `out_dir`/degraded and writes train.txt and test.txt.
/// Pair i of each kind uses clean image i mod n (after a seeded shuffle of
/// the clean list); the split is drawn over clean images, so a clean file
/// never appears in both splits and every kind gets the same test share.
/// Throws IoError when `clean_dir` holds no images.
DatasetManifest build_dataset(const std::filesystem::path& clean_dir,
                              const std::filesystem::path& out_dir, const DatasetOptions& options);

/// Lines of `kind<TAB>clean<TAB>degraded<TAB>spec_hash`; paths relative to
/// the manifest's directory, written with '/' separators.
std::string format_manifest(const std::vector<ManifestEntry>& entries,
                            const std::filesystem::path& manifest_dir);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
/// Paths come back resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
/// FNV-1a of the manifest file bytes, 16 hex digits.
std::string manifest_file_hash(const std::filesystem::path& path);

struct Sample {
  WeatherKind kind = WeatherKind::kHaze;
  Image degraded;
  Image clean;
};

/// Decodes every pair; throws ShapeError when a pair's sizes differ.
std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries);

/// Fisher-Yates driven by the top 53 bits of each draw, so the order does
/// not depend on the standard library's distribution implementations.
template <typename Item>
void seeded_shuffle(std::vector<Item>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace tanet::data
