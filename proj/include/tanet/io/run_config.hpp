// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "tanet/losses.hpp"
#include "tanet/nn/model.hpp"
#include "tanet/train/trainer.hpp"

namespace tanet::io {

/// Everything a train/ablate/gradcheck/params run needs. Defaults are the
/// desk-scale setting.
struct RunConfig {
  std::size_t base_channels = 16;
  std::size_t num_tabs = 2;
  std::size_t crop = 64;
  std::size_t batch = 4;
  std::size_t steps = 2000;
  double lr0 = 1e-4;
  double lr_min = 1e-7;
  double lambda_fft = 1e-2;
  double epsilon = 1e-3;
  std::uint64_t seed = 0;
  nn::Variant variant = nn::Variant::kNet5;
  bool use_global_residual = true;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "runs/default";

  nn::NetworkConfig network() const;
  losses::LossConfig loss() const;
  train::TrainOptions train_options() const;

  /// Throws ParameterError on out-of-range values.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses `key = value` lines; blank lines and lines starting with '#' are
/// ignored. Unknown or repeated keys and malformed values throw UsageError
/// naming the line.
RunConfig parse_run_config(std::string_view text, const std::string& source = "<config>");
/// Throws IoError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);
/// Applies one `key=value` override on top of `config`.
void apply_override(RunConfig& config, std::string_view assignment);

/// Every key in fixed order with resolved values; parse_run_config of the
/// result reproduces the config.
std::string format_run_config(const RunConfig& config);

}  // namespace tanet::io
