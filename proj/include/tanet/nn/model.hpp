// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tanet/nn/attention.hpp"

namespace tanet::nn {

/// Component-ablation rows. Net1 swaps all three attention modules for plain
/// conv paths; Net2..Net4 add LPA, GSA and GDA in turn; Net5 is Net4's
/// architecture trained with the FFT loss term.
enum class Variant : std::uint8_t { kNet1 = 1, kNet2, kNet3, kNet4, kNet5 };

struct VariantFeatures {
  bool lpa;
  bool gsa;
  bool gda;
  bool fft_loss;
};

VariantFeatures features(Variant v);
std::string_view to_string(Variant v);
/// Accepts "Net1".."Net5" (case-insensitive); throws UsageError otherwise.
Variant parse_variant(std::string_view text);
inline constexpr std::array<Variant, 5> kAllVariants = {
    Variant::kNet1, Variant::kNet2, Variant::kNet3, Variant::kNet4, Variant::kNet5};

struct NetworkConfig {
  std::size_t base_channels = 16;
  std::size_t num_tabs = 2;
  std::size_t downscale_stages = 2;
  std::size_t in_channels = 3;
  std::size_t out_channels = 3;
  bool use_global_residual = true;
  std::uint64_t seed = 0;
  Variant variant = Variant::kNet5;

  /// Channel width of the attention stage.
  std::size_t attention_channels() const { return base_channels << downscale_stages; }

  /// Throws ParameterError on inconsistent settings.
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

/// conv -> ReLU -> conv plus identity skip.
template <std::floating_point T>
struct ResidualBlock {
  ConvParams<T> conv1;
  ConvParams<T> conv2;

  static ResidualBlock create(ParameterStore<T>& store, const std::string& prefix,
                              std::size_t channels);
  Var<T> forward(const Var<T>& x) const;
};

/// Feature embedding layer: a resampling conv followed by three residual
/// blocks. Down layers use a stride-2 conv that doubles channels; up layers
/// upsample x2 (nearest) and use a conv that halves channels.
template <std::floating_point T>
struct FeatureEmbedding {
  bool upscale = false;
  ConvParams<T> conv;
  std::array<ResidualBlock<T>, 3> blocks;

  static FeatureEmbedding create(ParameterStore<T>& store, const std::string& prefix,
                                 std::size_t in_channels, bool upscale);
  Var<T> forward(const Var<T>& x) const;
};

/// Triplet attention block.
///   x   = ReLU(entry(F))
///   F^L = LPA(conv(ReLU(conv(x))))
///   F^G = GSA(conv(ReLU(conv(x))))
///   F^C = conv(ReLU(conv(ReLU(conv(x)))))
///   F^M = fusion(concat(F^L, F^G, F^C)) + F
///   F^D = GDA(F^M) + residual(F) + F^M
/// With an attention module disabled its slot becomes: LPA -> identity,
/// GSA -> 1x1 conv, GDA -> 3x3 conv plus identity skip.
template <std::floating_point T>
struct TABlock {
  std::size_t channels = 0;
  ConvParams<T> entry_conv;
  std::array<ConvParams<T>, 2> branch_l;
  std::optional<LPAModule<T>> lpa;
  std::array<ConvParams<T>, 2> branch_g;
  std::optional<GSAModule<T>> gsa;
  std::optional<ConvParams<T>> gsa_plain;
  std::array<ConvParams<T>, 3> branch_c;
  ConvParams<T> fusion_conv;    // 3C -> C, 1x1
  ConvParams<T> residual_conv;  // C -> C, 1x1
  std::optional<GDAModule<T>> gda;
  std::optional<ConvParams<T>> gda_plain;

  static TABlock create(ParameterStore<T>& store, const std::string& prefix,
                        std::size_t channels, VariantFeatures features = {true, true, true, true});
  Var<T> forward(const Var<T>& f) const;
};

/// Full encoder-decoder: head conv, two down FELs, the TAB stack, two up FELs
/// with additive skips from the matching encoder outputs, and a zero-init
/// tail conv producing the residual added to the input image.
template <std::floating_point T>
class TANetModel {
 public:
  explicit TANetModel(const NetworkConfig& config);
  // Parameters are shared handles; a copy would alias the original's weights.
  TANetModel(const TANetModel&) = delete;
  TANetModel& operator=(const TANetModel&) = delete;
  TANetModel(TANetModel&&) noexcept = default;
  TANetModel& operator=(TANetModel&&) noexcept = default;

  const NetworkConfig& config() const { return config_; }
  ParameterStore<T>& parameters() { return store_; }
  const ParameterStore<T>& parameters() const { return store_; }
  std::size_t param_count() const { return store_.count(); }

  /// Differentiable forward on (N, H, W, in_channels); H and W must be
  /// multiples of 4. No clamping, so losses see the raw prediction.
  Var<T> forward(const Var<T>& image) const;

  /// Inference path: forward without recording, clamped to [0, 1] when the
  /// global residual is on.
  Tensor<T> restore(const Tensor<T>& image) const;

  const std::vector<TABlock<T>>& tabs() const { return tabs_; }

 private:
  NetworkConfig config_;
  ParameterStore<T> store_;
  ConvParams<T> head_;
  std::array<FeatureEmbedding<T>, 2> down_;
  std::vector<TABlock<T>> tabs_;
  std::array<FeatureEmbedding<T>, 2> up_;
  ConvParams<T> tail_;
};

template <std::floating_point T>
TANetModel<T> build_ablation_variant(NetworkConfig config, Variant variant) {
  config.variant = variant;
  return TANetModel<T>(config);
}

/// Closed-form parameter count of the model NetworkConfig describes.
std::size_t count_parameters(const NetworkConfig& config);

/// Searches (base_channels, num_tabs) for the count closest to `target`.
/// Ties keep the narrower configuration.
NetworkConfig search_config_for_params(std::size_t target, NetworkConfig base = {});

/// Desk-scale default and the ~9M-parameter configuration.
NetworkConfig desk_config();
NetworkConfig full_scale_config();

extern template class TANetModel<float>;
extern template class TANetModel<double>;

}  // namespace tanet::nn
