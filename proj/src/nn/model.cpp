// SPDX-License-Identifier: Apache-2.0
#include "tanet/nn/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

namespace tanet::nn {

VariantFeatures features(Variant v) {
  switch (v) {
    case Variant::kNet1: return {false, false, false, false};
    case Variant::kNet2: return {true, false, false, false};
    case Variant::kNet3: return {true, true, false, false};
    case Variant::kNet4: return {true, true, true, false};
    case Variant::kNet5: return {true, true, true, true};
  }
  throw UsageError("unknown variant");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kNet1: return "Net1";
    case Variant::kNet2: return "Net2";
    case Variant::kNet3: return "Net3";
    case Variant::kNet4: return "Net4";
    case Variant::kNet5: return "Net5";
  }
  throw UsageError("unknown variant");
}

Variant parse_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Variant v : kAllVariants) {
    std::string name(to_string(v));
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (name == lower) return v;
  }
  throw UsageError("unknown variant '" + std::string(text) + "', expected Net1..Net5");
}

void NetworkConfig::validate() const {
  if (base_channels < 1) throw ParameterError("base_channels must be >= 1");
  if (base_channels % 2 != 0) {
    throw ParameterError("base_channels must be even so every stage splits evenly");
  }
  if (num_tabs < 1) throw ParameterError("num_tabs must be >= 1");
  if (downscale_stages != 2) throw ParameterError("downscale_stages is fixed at 2");
  if (in_channels != 3 || out_channels != 3) {
    throw ParameterError("image models map 3 channels to 3 channels");
  }
  (void)features(variant);
}

template <std::floating_point T>
ResidualBlock<T> ResidualBlock<T>::create(ParameterStore<T>& store, const std::string& prefix,
                                          std::size_t channels) {
  return {store.conv(prefix + ".conv1", 3, 3, channels, channels),
          store.conv(prefix + ".conv2", 3, 3, channels, channels)};
}

template <std::floating_point T>
Var<T> ResidualBlock<T>::forward(const Var<T>& x) const {
  return ops::add(x, conv2(ops::relu(conv1(x))));
}

template <std::floating_point T>
FeatureEmbedding<T> FeatureEmbedding<T>::create(ParameterStore<T>& store,
                                                const std::string& prefix,
                                                std::size_t in_channels, bool upscale) {
  FeatureEmbedding f;
  f.upscale = upscale;
  const std::size_t out = upscale ? in_channels / 2 : in_channels * 2;
  f.conv = store.conv(prefix + ".conv", 3, 3, in_channels, out, upscale ? 1 : 2);
  for (std::size_t i = 0; i < f.blocks.size(); ++i) {
    f.blocks[i] = ResidualBlock<T>::create(store, prefix + ".res" + std::to_string(i), out);
  }
  return f;
}

template <std::floating_point T>
Var<T> FeatureEmbedding<T>::forward(const Var<T>& x) const {
  Var<T> y = conv(upscale ? ops::upsample_nearest2x(x) : x);
  for (const auto& b : blocks) y = b.forward(y);
  return y;
}

template <std::floating_point T>
TABlock<T> TABlock<T>::create(ParameterStore<T>& store, const std::string& prefix,
                              std::size_t channels, VariantFeatures feats) {
  const std::size_t c = channels;
  TABlock b;
  b.channels = c;
  b.entry_conv = store.conv(prefix + ".entry_conv", 3, 3, c, c);
  for (std::size_t i = 0; i < 2; ++i) {
    b.branch_l[i] = store.conv(prefix + ".branch_l.conv" + std::to_string(i), 3, 3, c, c);
  }
  if (feats.lpa) b.lpa = LPAModule<T>::create(store, prefix + ".lpa");
  for (std::size_t i = 0; i < 2; ++i) {
    b.branch_g[i] = store.conv(prefix + ".branch_g.conv" + std::to_string(i), 3, 3, c, c);
  }
  if (feats.gsa) {
    b.gsa = GSAModule<T>::create(store, prefix + ".gsa", c);
  } else {
    b.gsa_plain = store.conv(prefix + ".gsa_plain", 1, 1, c, c);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    b.branch_c[i] = store.conv(prefix + ".branch_c.conv" + std::to_string(i), 3, 3, c, c);
  }
  b.fusion_conv = store.conv(prefix + ".fusion_conv", 1, 1, 3 * c, c);
  b.residual_conv = store.conv(prefix + ".residual_conv", 1, 1, c, c);
  if (feats.gda) {
    b.gda = GDAModule<T>::create(store, prefix + ".gda", c);
  } else {
    b.gda_plain = store.conv(prefix + ".gda_plain", 3, 3, c, c);
  }
  return b;
}

template <std::floating_point T>
Var<T> TABlock<T>::forward(const Var<T>& f) const {
  if (f.shape().channels() != channels) {
    throw ShapeError("TAB: input has " + std::to_string(f.shape().channels()) +
                     " channels, block expects " + std::to_string(channels));
  }
  const Var<T> x = ops::relu(entry_conv(f));

  Var<T> local = branch_l[1](ops::relu(branch_l[0](x)));
  if (lpa) local = lpa->forward(local);

  Var<T> strip = branch_g[1](ops::relu(branch_g[0](x)));
  strip = gsa ? gsa->forward(strip) : (*gsa_plain)(strip);

  Var<T> plain = branch_c[2](ops::relu(branch_c[1](ops::relu(branch_c[0](x)))));

  const Var<T> fused = ops::add(fusion_conv(ops::concat_channels<T>({local, strip, plain})), f);
  const Var<T> distributed = gda ? gda->forward(fused) : ops::add((*gda_plain)(fused), fused);
  return ops::add(ops::add(distributed, residual_conv(f)), fused);
}

template <std::floating_point T>
TANetModel<T>::TANetModel(const NetworkConfig& config)
    : config_(config), store_(config.seed) {
  config_.validate();
  const std::size_t b = config_.base_channels;
  const VariantFeatures feats = features(config_.variant);
  head_ = store_.conv("head", 3, 3, config_.in_channels, b);
  down_[0] = FeatureEmbedding<T>::create(store_, "down0", b, false);
  down_[1] = FeatureEmbedding<T>::create(store_, "down1", 2 * b, false);
  const std::size_t c = config_.attention_channels();
  for (std::size_t i = 0; i < config_.num_tabs; ++i) {
    tabs_.push_back(TABlock<T>::create(store_, "tab" + std::to_string(i), c, feats));
  }
  up_[0] = FeatureEmbedding<T>::create(store_, "up0", c, true);
  up_[1] = FeatureEmbedding<T>::create(store_, "up1", c / 2, true);
  tail_ = store_.conv("tail", 3, 3, b, config_.out_channels, 1, Init::kZero);
}

template <std::floating_point T>
Var<T> TANetModel<T>::forward(const Var<T>& image) const {
  const Shape& s = image.shape();
  if (s.channels() != config_.in_channels) {
    throw ShapeError("model expects " + std::to_string(config_.in_channels) +
                     "-channel images, got " + s.str());
  }
  if (s.height() % 4 != 0 || s.width() % 4 != 0) {
    throw ShapeError("image " + std::to_string(s.height()) + "x" + std::to_string(s.width()) +
                     " is not divisible by 4; pad it (e.g. by reflection) to a multiple of 4");
  }
  const Var<T> h0 = head_(image);
  const Var<T> e1 = down_[0].forward(h0);
  const Var<T> e2 = down_[1].forward(e1);
  Var<T> t = e2;
  for (const auto& tab : tabs_) t = tab.forward(t);
  const Var<T> u1 = up_[0].forward(ops::add(t, e2));
  const Var<T> u2 = up_[1].forward(ops::add(u1, e1));
  const Var<T> residual = tail_(u2);
  return config_.use_global_residual ? ops::add(image, residual) : residual;
}

template <std::floating_point T>
Tensor<T> TANetModel<T>::restore(const Tensor<T>& image) const {
  Tensor<T> out = forward(Var<T>::constant(image)).value();
  if (config_.use_global_residual) {
    for (auto& v : out.data()) v = std::clamp(v, T(0), T(1));
  }
  return out;
}

namespace {

std::size_t conv_count(std::size_t kh, std::size_t kw, std::size_t cin, std::size_t cout) {
  return kh * kw * cin * cout + cout;
}

std::size_t fel_count(std::size_t cin, bool upscale) {
  const std::size_t out = upscale ? cin / 2 : cin * 2;
  return conv_count(3, 3, cin, out) + 6 * conv_count(3, 3, out, out);
}

std::size_t tab_count(std::size_t c, VariantFeatures f) {
  std::size_t n = 8 * conv_count(3, 3, c, c);  // entry + 2 + 2 + 3 branch convs
  if (f.lpa) n += conv_count(7, 7, 2, 1);
  n += f.gsa ? conv_count(1, 3, c, c) + conv_count(3, 1, c, c) + conv_count(1, 1, c, c)
             : conv_count(1, 1, c, c);
  n += conv_count(1, 1, 3 * c, c) + conv_count(1, 1, c, c);
  n += f.gda ? 2 * conv_count(3, 3, c, c) + conv_count(3, 3, c / 2, c / 2) + c
             : conv_count(3, 3, c, c);
  return n;
}

}  // namespace

std::size_t count_parameters(const NetworkConfig& config) {
  config.validate();
  const std::size_t b = config.base_channels;
  const std::size_t c = config.attention_channels();
  return conv_count(3, 3, config.in_channels, b) + fel_count(b, false) +
         fel_count(2 * b, false) + config.num_tabs * tab_count(c, features(config.variant)) +
         fel_count(c, true) + fel_count(c / 2, true) + conv_count(3, 3, b, config.out_channels);
}

NetworkConfig search_config_for_params(std::size_t target, NetworkConfig base) {
  NetworkConfig best = base;
  std::size_t best_gap = static_cast<std::size_t>(-1);
  for (std::size_t channels = 2; channels <= 128; channels += 2) {
    for (std::size_t tabs = 1; tabs <= 32; ++tabs) {
      NetworkConfig candidate = base;
      candidate.base_channels = channels;
      candidate.num_tabs = tabs;
      const std::size_t n = count_parameters(candidate);
      const std::size_t gap = n > target ? n - target : target - n;
      if (gap < best_gap) {
        best_gap = gap;
        best = candidate;
      }
    }
  }
  return best;
}

NetworkConfig desk_config() { return NetworkConfig{}; }

NetworkConfig full_scale_config() { return search_config_for_params(9'000'000); }

template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template struct FeatureEmbedding<float>;
template struct FeatureEmbedding<double>;
template struct TABlock<float>;
template struct TABlock<double>;
template class TANetModel<float>;
template class TANetModel<double>;

}  // namespace tanet::nn
