// SPDX-License-Identifier: Apache-2.0
#include "tanet/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tanet/hash.hpp"

namespace tanet::data {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("clean image directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  }
  if (out.empty()) throw IoError("no .png or .ppm images in " + dir.string());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path absolute_normal(const fs::path& p) {
  return fs::weakly_canonical(fs::absolute(p));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

KindCounts count_kinds(const std::vector<ManifestEntry>& entries) {
  KindCounts counts{};
  for (const auto& e : entries) ++counts[static_cast<std::size_t>(e.kind)];
  return counts;
}

DatasetManifest build_dataset(const fs::path& clean_dir, const fs::path& out_dir,
                              const DatasetOptions& options) {
  if (options.per_kind < 1) throw ParameterError("per_kind must be >= 1");
  if (!(options.split_ratio > 0.0 && options.split_ratio <= 1.0)) {
    throw ParameterError("split_ratio must lie in (0, 1]");
  }
  std::vector<fs::path> cleans = list_images(clean_dir);
  const fs::path degraded_dir = out_dir / "degraded";
  std::error_code ec;
  fs::create_directories(degraded_dir, ec);
  if (ec) throw IoError("cannot create " + degraded_dir.string() + ": " + ec.message());

  std::mt19937_64 rng(options.seed);
  seeded_shuffle(cleans, rng);
  const std::size_t n = cleans.size();
  std::size_t n_test = 0;
  if (options.split_ratio < 1.0 && n >= 2) {
    const auto rounded = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * (1.0 - options.split_ratio)));
    n_test = std::clamp<std::size_t>(rounded, 1, n - 1);
  }

  std::vector<Image> clean_images;
  clean_images.reserve(n);
  for (const auto& p : cleans) clean_images.push_back(read_image(p));

  DatasetManifest manifest;
  for (WeatherKind kind : kAllKinds) {
    for (std::size_t i = 0; i < options.per_kind; ++i) {
      const std::size_t ci = i % n;
      const DegradationSpec spec = random_spec(kind, rng);
      char name[48];
      std::snprintf(name, sizeof name, "%s_%04zu.png", std::string(to_string(kind)).c_str(), i);
      const fs::path degraded = degraded_dir / name;
      write_image(degraded, degrade(clean_images[ci], spec));
      ManifestEntry entry{kind, absolute_normal(cleans[ci]), absolute_normal(degraded),
                          hex64(spec.hash())};
      (ci >= n - n_test ? manifest.test : manifest.train).push_back(std::move(entry));
    }
  }
  seeded_shuffle(manifest.train, rng);
  seeded_shuffle(manifest.test, rng);
  write_manifest(out_dir / "train.txt", manifest.train);
  write_manifest(out_dir / "test.txt", manifest.test);
  return manifest;
}

std::string format_manifest(const std::vector<ManifestEntry>& entries, const fs::path& manifest_dir) {
  const fs::path base = absolute_normal(manifest_dir);
  std::string out;
  for (const auto& e : entries) {
    out += to_string(e.kind);
    out += '\t';
    out += absolute_normal(e.clean).lexically_relative(base).generic_string();
    out += '\t';
    out += absolute_normal(e.degraded).lexically_relative(base).generic_string();
    out += '\t';
    out += e.spec_hash;
    out += '\n';
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  const std::string text = format_manifest(entries, path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << text;
  if (!out) throw IoError("failed writing manifest " + path.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != 4) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    ManifestEntry e;
    try {
      e.kind = parse_kind(fields[0]);
    } catch (const UsageError& err) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + err.what());
    }
    e.clean = (base / fields[1]).lexically_normal();
    e.degraded = (base / fields[2]).lexically_normal();
    e.spec_hash = fields[3];
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string manifest_file_hash(const fs::path& path) { return hex64(fnv1a(read_file(path))); }

std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries) {
  std::vector<Sample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    Sample s{e.kind, read_image(e.degraded), read_image(e.clean)};
    if (s.degraded.shape() != s.clean.shape()) {
      throw ShapeError("pair size mismatch: " + e.degraded.string() + " " + s.degraded.shape().str() +
                       " vs " + e.clean.string() + " " + s.clean.shape().str());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace tanet::data
