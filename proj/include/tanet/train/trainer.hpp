// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "tanet/data/dataset.hpp"
#include "tanet/nn/model.hpp"
#include "tanet/train/optim.hpp"

namespace tanet::train {

struct TrainOptions {
  std::size_t steps = 2000;
  std::size_t batch = 4;
  std::size_t crop = 64;
  /// Write a checkpoint after every this many steps (0 disables); the final
  /// model is always written when out_dir is set.
  std::size_t checkpoint_every = 500;
  /// Receives loss.csv, checkpoint_NNNNNN.tant and model.tant (also for a
  /// zero-step run). Empty keeps training in memory.
  std::filesystem::path out_dir;
  std::ostream* log = nullptr;
  std::size_t log_every = 100;
};

struct LossPoint {
  std::size_t step;  // 0-based index of the update
  double loss;
  double lr;
};

struct TrainResult {
  std::vector<LossPoint> curve;
};

/// The loss configuration a variant trains with: the FFT term is enabled
/// only for variants whose features include it.
losses::LossConfig loss_config_for(nn::Variant variant, losses::LossConfig base);

/// Adam with cosine-annealed learning rate over `options.steps` updates.
/// Each batch draws samples from a seeded per-epoch permutation and applies
/// a random crop, flip and quarter-turn to both images of every pair.
/// Deterministic in (state.seed, model init, samples). A non-finite loss or
/// gradient throws NumericError; checkpoints already written are kept and
/// the loss curve so far is flushed to loss.csv.
template <std::floating_point T>
TrainResult train(nn::TANetModel<T>& model, const std::vector<data::Sample>& samples,
                  TrainState<T>& state, const TrainOptions& options);

/// "step,loss,lr" header plus one row per point.
std::string format_loss_csv(const std::vector<LossPoint>& curve);

/// Mean loss over the first and last `window` points.
std::pair<double, double> smoothed_endpoints(const std::vector<LossPoint>& curve,
                                             std::size_t window);

}  // namespace tanet::train
