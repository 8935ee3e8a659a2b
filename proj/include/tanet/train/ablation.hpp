// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "tanet/train/evaluate.hpp"
#include "tanet/train/trainer.hpp"

namespace tanet::train {

struct AblationRow {
  nn::Variant variant = nn::Variant::kNet1;
  std::size_t params = 0;
  std::array<double, 3> psnr{};  // haze, rain, snow
  double average = 0;
  double degraded_average = 0;
  double final_loss = 0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::string manifest_hash;
  std::size_t steps = 0;

  /// Throws UsageError when the variant was not run.
  const AblationRow& row(nn::Variant v) const;
};

struct AblationOptions {
  TrainOptions train;  // out_dir, when set, gets one subdirectory per variant
  double lr0 = 1e-4;
  double lr_min = 1e-7;
  std::uint64_t seed = 0;
  losses::LossConfig loss;  // fft_enabled is overridden per variant
  std::vector<nn::Variant> variants{nn::kAllVariants.begin(), nn::kAllVariants.end()};
};

/// Trains every variant from `base` under the same budget, seed and batch
/// order, then evaluates each on `test`.
AblationTable run_ablation(const nn::NetworkConfig& base, const std::vector<data::Sample>& train_set,
                           const std::vector<data::Sample>& test_set, const std::string& manifest_hash,
                           const AblationOptions& options);

std::string format_ablation_table(const AblationTable& table);
std::string format_ablation_csv(const AblationTable& table);

}  // namespace tanet::train
