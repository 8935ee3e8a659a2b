// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "tanet/nn/attention.hpp"
#include "tanet/nn/model.hpp"
#include "test_util.hpp"

namespace tanet::nn {
namespace {

using tanet::testing::max_abs_diff;
using tanet::testing::naive_conv;
using tanet::testing::random_tensor;
using V = Var<double>;

// Var is a shared handle, so a copy reaches the same storage.
Tensor<double>& mut(V v) { return v.mutable_value(); }

void zero_all(ParameterStore<double>& store) {
  for (const auto& p : store.parameters()) {
    if (p.name.ends_with(".gamma")) continue;
    for (auto& v : mut(p.var).data()) v = 0.0;
  }
}

void randomize_all(ParameterStore<double>& store, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (const auto& p : store.parameters())
    for (auto& v : mut(p.var).data()) v = dist(rng);
}

Tensor<double> apply(const ConvParams<double>& c, const Tensor<double>& x) {
  return naive_conv(x, c.weight.value(), c.bias.value(), c.options.stride, c.options.pad_h,
                    c.options.pad_w);
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// ---- LPA ----

TEST(LPATest, ZeroConvGivesHalfInput) {
  ParameterStore<double> store(1);
  const auto lpa = LPAModule<double>::create(store, "lpa");
  zero_all(store);
  std::mt19937_64 rng(2);
  const V f = V::constant(random_tensor(Shape(1, 4, 4, 2), rng));
  const auto out = lpa.forward(f).value();
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 0.5 * f.value()[i]);
}

TEST(LPATest, ConstantInputGivesSpatiallyConstantMapAwayFromBorder) {
  ParameterStore<double> store(3);
  const auto lpa = LPAModule<double>::create(store, "lpa");
  // A kernel that only has a center tap sees no padding, so the map is flat.
  auto& w = mut(lpa.fuse_conv.weight);
  for (auto& v : w.data()) v = 0.0;
  w.at(3, 3, 0, 0) = 0.8;
  w.at(3, 3, 1, 0) = -0.3;
  const V f = V::constant(Tensor<double>(Shape(1, 5, 5, 3), 0.4));
  const auto map = lpa.attention_map(f).value();
  for (double v : map.data()) EXPECT_DOUBLE_EQ(v, sigmoid(0.8 * 0.4 - 0.3 * 0.4));
}

TEST(LPATest, MatchesHandComposedOracle) {
  std::mt19937_64 rng(4);
  ParameterStore<double> store(4);
  const auto lpa = LPAModule<double>::create(store, "lpa");
  randomize_all(store, rng);
  const auto f = random_tensor(Shape(1, 4, 4, 2), rng);
  Tensor<double> pooled(Shape(1, 4, 4, 2));
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      const double a = f.at(0, y, x, 0), b = f.at(0, y, x, 1);
      pooled.at(0, y, x, 0) = (a + b) / 2;
      pooled.at(0, y, x, 1) = std::max(a, b);
    }
  const auto logits = apply(lpa.fuse_conv, pooled);
  Tensor<double> expect(f.shape());
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 2; ++c)
        expect.at(0, y, x, c) = sigmoid(logits.at(0, y, x, 0)) * f.at(0, y, x, c);
  EXPECT_LE(max_abs_diff(lpa.forward(V::constant(f)).value(), expect), 1e-12);
}

// ---- GSA ----

TEST(GSATest, ZeroConvsGiveHalfInput) {
  ParameterStore<double> store(1);
  const auto gsa = GSAModule<double>::create(store, "gsa", 3);
  zero_all(store);
  std::mt19937_64 rng(5);
  const V f = V::constant(random_tensor(Shape(1, 5, 4, 3), rng));
  const auto out = gsa.forward(f).value();
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 0.5 * f.value()[i]);
}

TEST(GSATest, IdentityKernelsOnTwoByTwoGiveStripSums) {
  ParameterStore<double> store(1);
  const auto gsa = GSAModule<double>::create(store, "gsa", 1);
  zero_all(store);
  mut(gsa.h_conv.weight).at(0, 1, 0, 0) = 1.0;
  mut(gsa.v_conv.weight).at(1, 0, 0, 0) = 1.0;
  mut(gsa.fuse_conv.weight).at(0, 0, 0, 0) = 1.0;
  const V f = V::constant(Tensor<double>(Shape(1, 2, 2, 1), std::vector<double>{1, 3, 5, 7}));
  const auto logits = gsa.logits(f).value();
  EXPECT_EQ(logits.at(0, 0, 0, 0), 5.0);
  EXPECT_EQ(logits.at(0, 0, 1, 0), 7.0);
  EXPECT_EQ(logits.at(0, 1, 0, 0), 9.0);
  EXPECT_EQ(logits.at(0, 1, 1, 0), 11.0);
}

TEST(GSATest, ConstantInputGivesSpatiallyConstantOutputWithCenterTaps) {
  std::mt19937_64 rng(6);
  ParameterStore<double> store(1);
  const auto gsa = GSAModule<double>::create(store, "gsa", 2);
  randomize_all(store, rng);
  for (std::size_t k = 0; k < 3; ++k)
    if (k != 1)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t o = 0; o < 2; ++o) {
          mut(gsa.h_conv.weight).at(0, k, i, o) = 0.0;
          mut(gsa.v_conv.weight).at(k, 0, i, o) = 0.0;
        }
  const V f = V::constant(Tensor<double>(Shape(1, 4, 6, 2), 0.3));
  const auto out = gsa.forward(f).value();
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 6; ++x) EXPECT_DOUBLE_EQ(out.at(0, y, x, c), out.at(0, 0, 0, c));
}

TEST(GSATest, MatchesHandComposedOracle) {
  std::mt19937_64 rng(7);
  ParameterStore<double> store(7);
  const auto gsa = GSAModule<double>::create(store, "gsa", 2);
  randomize_all(store, rng);
  const std::size_t h = 5, w = 4, c = 2;
  const auto f = random_tensor(Shape(1, h, w, c), rng);
  Tensor<double> col(Shape(1, 1, w, c)), row(Shape(1, h, 1, c));
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0;
      for (std::size_t y = 0; y < h; ++y) s += f.at(0, y, x, k);
      col.at(0, 0, x, k) = s / h;
    }
    for (std::size_t y = 0; y < h; ++y) {
      double s = 0;
      for (std::size_t x = 0; x < w; ++x) s += f.at(0, y, x, k);
      row.at(0, y, 0, k) = s / w;
    }
  }
  const auto hc = apply(gsa.h_conv, col), vc = apply(gsa.v_conv, row);
  Tensor<double> sum(f.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k) sum.at(0, y, x, k) = hc.at(0, 0, x, k) + vc.at(0, y, 0, k);
  const auto logits = apply(gsa.fuse_conv, sum);
  Tensor<double> expect(f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) expect[i] = sigmoid(logits[i]) * f[i];
  EXPECT_LE(max_abs_diff(gsa.forward(V::constant(f)).value(), expect), 1e-12);
}

// ---- GDA ----

TEST(GDATest, ZeroConvsReturnInput) {
  ParameterStore<double> store(1);
  const auto gda = GDAModule<double>::create(store, "gda", 4);
  zero_all(store);
  std::mt19937_64 rng(8);
  const V f = V::constant(random_tensor(Shape(1, 4, 4, 4), rng));
  EXPECT_EQ(max_abs_diff(gda.forward(f).value(), f.value()), 0.0);
}

TEST(GDATest, OddChannelCountIsRejected) {
  ParameterStore<double> store(1);
  EXPECT_THROW(GDAModule<double>::create(store, "gda", 3), ParameterError);
  EXPECT_THROW(GDAModule<double>::create(store, "gdb", 1), ParameterError);
}

TEST(GDATest, ConstantFirstHalfNormalizesToBeta) {
  ParameterStore<double> store(1);
  auto gda = GDAModule<double>::create(store, "gda", 2);
  zero_all(store);
  mut(gda.pre_conv.weight).at(1, 1, 0, 0) = 1.0;
  mut(gda.beta)[0] = 0.25;
  mut(gda.post_conv.weight).at(1, 1, 0, 0) = 1.0;
  Tensor<double> f(Shape(1, 3, 3, 2));
  for (std::size_t i = 0; i < 9; ++i) {
    f[2 * i] = 0.6;
    f[2 * i + 1] = 0.1 * i;
  }
  const auto out = gda.forward(V::constant(f)).value();
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(out[2 * i], 0.25 + 0.6, 1e-12);
    EXPECT_EQ(out[2 * i + 1], f[2 * i + 1]);
  }
}

TEST(GDATest, MatchesHandComposedOracle) {
  std::mt19937_64 rng(9);
  ParameterStore<double> store(9);
  const auto gda = GDAModule<double>::create(store, "gda", 4);
  randomize_all(store, rng);
  const auto f = random_tensor(Shape(1, 4, 4, 4), rng);
  const auto pre = apply(gda.pre_conv, f);
  Tensor<double> first(Shape(1, 4, 4, 2)), second(Shape(1, 4, 4, 2));
  for (std::size_t p = 0; p < 16; ++p)
    for (std::size_t k = 0; k < 2; ++k) {
      first[p * 2 + k] = pre[p * 4 + k];
      second[p * 2 + k] = pre[p * 4 + 2 + k];
    }
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0, var = 0;
    for (std::size_t p = 0; p < 16; ++p) mean += first[p * 2 + k];
    mean /= 16;
    for (std::size_t p = 0; p < 16; ++p) var += std::pow(first[p * 2 + k] - mean, 2);
    var /= 16;
    for (std::size_t p = 0; p < 16; ++p)
      first[p * 2 + k] = gda.gamma.value()[k] * (first[p * 2 + k] - mean) / std::sqrt(var + gda.eps) +
                         gda.beta.value()[k];
  }
  const auto kept = apply(gda.bypass_conv, second);
  Tensor<double> joined(f.shape());
  for (std::size_t p = 0; p < 16; ++p)
    for (std::size_t k = 0; k < 2; ++k) {
      joined[p * 4 + k] = first[p * 2 + k];
      joined[p * 4 + 2 + k] = kept[p * 2 + k];
    }
  auto expect = apply(gda.post_conv, joined);
  for (std::size_t i = 0; i < expect.size(); ++i) expect[i] += f[i];
  EXPECT_LE(max_abs_diff(gda.forward(V::constant(f)).value(), expect), 1e-12);
}

// ---- TAB ----

TEST(TABTest, AllZeroWeightsDoubleTheInput) {
  ParameterStore<double> store(1);
  const auto tab = TABlock<double>::create(store, "tab", 4);
  zero_all(store);
  std::mt19937_64 rng(10);
  const V f = V::constant(random_tensor(Shape(2, 4, 4, 4), rng));
  const auto out = tab.forward(f).value();
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 2.0 * f.value()[i]);
}

TEST(TABTest, PreservesShapeAndRejectsWrongChannels) {
  ParameterStore<double> store(2);
  const auto tab = TABlock<double>::create(store, "tab", 4);
  std::mt19937_64 rng(11);
  const V f = V::constant(random_tensor(Shape(1, 6, 5, 4), rng));
  EXPECT_EQ(tab.forward(f).shape(), f.shape());
  EXPECT_THROW(tab.forward(V::constant(Tensor<double>(Shape(1, 4, 4, 2)))), ShapeError);
}

TEST(TABTest, DisabledModulesUsePlainReplacements) {
  ParameterStore<double> store(3);
  const auto tab = TABlock<double>::create(store, "tab", 4, {false, false, false, false});
  EXPECT_FALSE(tab.lpa.has_value());
  EXPECT_FALSE(tab.gsa.has_value());
  EXPECT_FALSE(tab.gda.has_value());
  ASSERT_TRUE(tab.gsa_plain.has_value());
  ASSERT_TRUE(tab.gda_plain.has_value());
  EXPECT_EQ(tab.gsa_plain->weight.shape(), Shape::kernel(1, 1, 4, 4));
  zero_all(store);
  std::mt19937_64 rng(12);
  const V f = V::constant(random_tensor(Shape(1, 4, 4, 4), rng));
  const auto out = tab.forward(f).value();
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 2.0 * f.value()[i]);
}

// ---- full model ----

TEST(ModelTest, IdentityAtInitIsBitwise) {
  std::mt19937_64 rng(13);
  for (Variant v : kAllVariants) {
    NetworkConfig cfg;
    cfg.base_channels = 4;
    cfg.num_tabs = 1;
    cfg.variant = v;
    const TANetModel<double> model(cfg);
    const V x = V::constant(random_tensor(Shape(1, 8, 12, 3), rng, 0.0, 1.0));
    const auto y = model.forward(x).value();
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_EQ(y[i], x.value()[i]) << to_string(v);
  }
  const TANetModel<float> desk(desk_config());
  std::mt19937_64 rng2(14);
  Tensor<float> img(Shape(1, 64, 64, 3));
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (auto& v : img.data()) v = u(rng2);
  const auto out = desk.restore(img);
  EXPECT_EQ(out.shape(), img.shape());
  for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i], img[i]);
}

TEST(ModelTest, RandomWeightsKeepImageShape) {
  NetworkConfig cfg;
  cfg.base_channels = 4;
  cfg.num_tabs = 2;
  TANetModel<double> model(cfg);
  std::mt19937_64 rng(15);
  randomize_all(model.parameters(), rng);
  const V x = V::constant(random_tensor(Shape(2, 16, 8, 3), rng, 0.0, 1.0));
  EXPECT_EQ(model.forward(x).shape(), x.shape());
  EXPECT_THROW(model.forward(V::constant(Tensor<double>(Shape(1, 10, 8, 3)))), ShapeError);
  EXPECT_THROW(model.forward(V::constant(Tensor<double>(Shape(1, 8, 8, 1)))), ShapeError);
}

TEST(ModelTest, DeskParameterCountMatchesLayerByLayerTally) {
  // head 3x3 3->16, FELs 16->32, 32->64, 64->32, 32->16 (stem conv + 6 convs
  // each), two TABs at 64 channels, tail 3x3 16->3.
  auto conv = [](std::size_t kh, std::size_t kw, std::size_t i, std::size_t o) {
    return kh * kw * i * o + o;
  };
  auto fel = [&](std::size_t i, std::size_t o) { return conv(3, 3, i, o) + 6 * conv(3, 3, o, o); };
  const std::size_t c = 64;
  const std::size_t tab = 8 * conv(3, 3, c, c) + conv(7, 7, 2, 1) + conv(1, 3, c, c) +
                          conv(3, 1, c, c) + conv(1, 1, c, c) + conv(1, 1, 3 * c, c) +
                          conv(1, 1, c, c) + 2 * conv(3, 3, c, c) + conv(3, 3, c / 2, c / 2) + c;
  const std::size_t expect = conv(3, 3, 3, 16) + fel(16, 32) + fel(32, 64) + 2 * tab + fel(64, 32) +
                             fel(32, 16) + conv(3, 3, 16, 3);
  EXPECT_EQ(expect, 1'241'705u);
  const TANetModel<float> model(desk_config());
  EXPECT_EQ(model.param_count(), expect);
  EXPECT_EQ(count_parameters(desk_config()), expect);
}

TEST(ModelTest, ClosedFormCountAgreesWithBuiltModels) {
  for (std::size_t b : {2, 4, 6}) {
    for (std::size_t tabs : {1, 3}) {
      for (Variant v : kAllVariants) {
        NetworkConfig cfg;
        cfg.base_channels = b;
        cfg.num_tabs = tabs;
        cfg.variant = v;
        EXPECT_EQ(TANetModel<float>(cfg).param_count(), count_parameters(cfg));
      }
    }
  }
}

TEST(ModelTest, VariantCountsAreOrderedAndNet1HasNoNormalization) {
  NetworkConfig cfg = desk_config();
  std::size_t counts[5];
  for (Variant v : kAllVariants) {
    cfg.variant = v;
    counts[static_cast<int>(v) - 1] = count_parameters(cfg);
  }
  EXPECT_LT(counts[0], counts[1]);
  EXPECT_LT(counts[1], counts[2]);
  EXPECT_LT(counts[2], counts[3]);
  EXPECT_EQ(counts[3], counts[4]);
  const auto net1 = build_ablation_variant<float>(desk_config(), Variant::kNet1);
  for (const auto& p : net1.parameters().parameters()) {
    EXPECT_EQ(p.name.find("gamma"), std::string::npos);
    EXPECT_EQ(p.name.find("lpa"), std::string::npos);
  }
  EXPECT_TRUE(features(Variant::kNet5).fft_loss);
  EXPECT_FALSE(features(Variant::kNet4).fft_loss);
}

TEST(ModelTest, FullScaleCountBracketsNineMillion) {
  const std::size_t n = count_parameters(full_scale_config());
  EXPECT_GE(n, 8'100'000u);
  EXPECT_LE(n, 9'900'000u);
}

TEST(ModelTest, VariantNamesRoundTrip) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(parse_variant("net3"), Variant::kNet3);
  EXPECT_THROW(parse_variant("Net6"), UsageError);
  EXPECT_THROW(parse_variant(""), UsageError);
}

TEST(ModelTest, SameSeedGivesBitwiseIdenticalForward) {
  NetworkConfig cfg;
  cfg.base_channels = 4;
  cfg.seed = 77;
  TANetModel<double> a(cfg), b(cfg);
  // Give the tail non-zero weights so the output depends on every layer.
  for (TANetModel<double>* m : {&a, &b}) {
    std::mt19937_64 r(3);
    mut(m->parameters().find("tail.weight")) = random_tensor(Shape::kernel(3, 3, 4, 3), r);
  }
  std::mt19937_64 rng(16);
  const V x = V::constant(random_tensor(Shape(1, 8, 8, 3), rng, 0.0, 1.0));
  const auto ya = a.forward(x).value(), yb = b.forward(x).value();
  for (std::size_t i = 0; i < ya.size(); ++i) ASSERT_EQ(ya[i], yb[i]);
  cfg.seed = 78;
  TANetModel<double> c(cfg);
  EXPECT_NE(max_abs_diff(c.parameters().find("head.weight").value(),
                         a.parameters().find("head.weight").value()),
            0.0);
}

TEST(ModelTest, InvalidConfigurationsAreRejected) {
  NetworkConfig cfg;
  cfg.base_channels = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = NetworkConfig{};
  cfg.num_tabs = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

}  // namespace
}  // namespace tanet::nn
