// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tanet/nn/model.hpp"

namespace tanet::train {

struct GradCheckOptions {
  double h = 1e-5;
  double tolerance = 1e-4;
  /// Relative errors use max(|numeric|, |analytic|, abs_floor / tolerance)
  /// as denominator, so a probe passes when either its relative error is
  /// within `tolerance` or its absolute error is below this floor.
  double abs_floor = 1e-8;
  /// Coordinates probed per tensor, plus the one with the largest analytic
  /// gradient. Tensors this small are probed exhaustively.
  std::size_t samples_per_tensor = 6;
  std::uint64_t seed = 1;
};

struct GroupResult {
  std::string group;
  std::size_t checked = 0;
  /// Probes skipped because a ReLU, max or |x| branch changed inside +-h.
  std::size_t skipped = 0;
  double max_rel_error = 0;
  double max_abs_error = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::string name;
  std::vector<GroupResult> groups;

  bool pass() const;
  double max_rel_error() const;
  std::size_t checked() const;
  std::size_t skipped() const;
};

/// Central differences of `loss` (a scalar recomputed from the current
/// parameter values on every call) against the tape gradient, one group per
/// named tensor.
GradCheckReport check_gradients(const std::string& name, const std::function<Var<double>()>& loss,
                                const std::vector<nn::NamedParameter<double>>& params,
                                const GradCheckOptions& options = {});

/// Redraws every tensor of a freshly built model so no gradient path is
/// trivially zero: kernels U(+-1/sqrt(fan_in)), biases and betas U(+-0.5),
/// gammas 1 + U(+-0.25).
void randomize_parameters(const std::vector<nn::NamedParameter<double>>& params,
                          std::mt19937_64& rng);

/// The standard battery: LPA on 4x4x2, GSA on 5x4x2, GDA and one TAB on
/// 4x4x4, both losses, and a full model with `config`'s width on 8x8x3.
std::vector<GradCheckReport> run_gradcheck_suite(const nn::NetworkConfig& config,
                                                 const GradCheckOptions& options = {});

std::string format_gradcheck(const std::vector<GradCheckReport>& reports, bool per_group = false);

}  // namespace tanet::train
