// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "tanet/io/checkpoint.hpp"
#include "tanet/io/run_config.hpp"
#include "test_util.hpp"

namespace tanet::io {
namespace {

namespace fs = std::filesystem;

nn::TANetModel<float> trained_looking_model(nn::Variant v, std::uint64_t seed) {
  nn::NetworkConfig cfg;
  cfg.base_channels = 4;
  cfg.num_tabs = 2;
  cfg.variant = v;
  cfg.seed = seed;
  nn::TANetModel<float> model(cfg);
  // Non-zero tail so restored images depend on every weight.
  std::mt19937_64 rng(seed);
  for (auto& x : model.parameters().find("tail.weight").mutable_value().data())
    x = static_cast<float>(nn::uniform01(rng) - 0.5) * 0.1f;
  return model;
}

TEST(CheckpointTest, SaveLoadSaveIsByteIdenticalForEveryVariant) {
  for (nn::Variant v : nn::kAllVariants) {
    const auto model = trained_looking_model(v, 3);
    const auto bytes = serialize_checkpoint(model);
    const auto loaded = deserialize_checkpoint<float>(bytes);
    EXPECT_EQ(loaded.config(), model.config());
    EXPECT_EQ(serialize_checkpoint(loaded), bytes);
  }
}

TEST(CheckpointTest, RestoredOutputsAreBitwiseEqualAfterReload) {
  const fs::path path = fs::temp_directory_path() / ("tanet_ckpt_" + std::to_string(std::random_device{}()) + ".tant");
  const auto model = trained_looking_model(nn::Variant::kNet5, 4);
  save_checkpoint(path, model);
  const auto loaded = load_checkpoint<float>(path);
  std::mt19937_64 rng(5);
  const Tensor<float> img = tensor_cast<float>(tanet::testing::random_tensor(Shape(1, 16, 12, 3), rng, 0, 1));
  const auto a = model.restore(img), b = loaded.restore(img);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
  fs::remove(path);
}

TEST(CheckpointTest, CorruptionIsDetected) {
  const auto bytes = serialize_checkpoint(trained_looking_model(nn::Variant::kNet2, 6));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint<float>(bad_magic), CheckpointError);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_checkpoint<float>(flipped), CheckpointError);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{40}, bytes.size() - 1}) {
    const std::vector<unsigned char> truncated(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    EXPECT_THROW(deserialize_checkpoint<float>(truncated), CheckpointError) << cut;
  }
  auto padded = bytes;
  padded.push_back(0);
  EXPECT_THROW(deserialize_checkpoint<float>(padded), CheckpointError);
  EXPECT_THROW(load_checkpoint<float>("/nonexistent/dir/model.tant"), CheckpointError);
  EXPECT_THROW(save_checkpoint("/nonexistent/dir/model.tant", trained_looking_model(nn::Variant::kNet1, 1)),
               IoError);
}

TEST(CheckpointTest, HeaderStartsWithMagicAndVersion) {
  const auto bytes = serialize_checkpoint(trained_looking_model(nn::Variant::kNet1, 7));
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TANT");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
}

TEST(RunConfigTest, FormatParseRoundTrip) {
  RunConfig cfg;
  cfg.base_channels = 28;
  cfg.num_tabs = 6;
  cfg.lr0 = 2e-4;
  cfg.variant = nn::Variant::kNet3;
  cfg.use_global_residual = false;
  cfg.out_dir = "runs/x y";
  EXPECT_EQ(parse_run_config(format_run_config(cfg)), cfg);
  EXPECT_EQ(parse_run_config(format_run_config(RunConfig{})), RunConfig{});
}

TEST(RunConfigTest, CommentsBlankLinesAndOverrides) {
  const RunConfig cfg = parse_run_config("# desk\n\n# short run\nsteps = 500\n  seed=3\nvariant = net1\n");
  EXPECT_EQ(cfg.steps, 500u);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.variant, nn::Variant::kNet1);
  RunConfig o = cfg;
  apply_override(o, "crop=32");
  EXPECT_EQ(o.crop, 32u);
  EXPECT_THROW(apply_override(o, "crop"), UsageError);
}

TEST(RunConfigTest, BadInputIsRejectedWithLineNumbers) {
  try {
    parse_run_config("steps = 5\nbogus = 1\n", "x.cfg");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_run_config("steps = 5\nsteps = 6\n"), UsageError);
  EXPECT_THROW(parse_run_config("steps = five\n"), UsageError);
  EXPECT_THROW(parse_run_config("lr0 = 1e-4x\n"), UsageError);
  EXPECT_THROW(parse_run_config("use_global_residual = maybe\n"), UsageError);
  RunConfig cfg;
  cfg.crop = 30;
  EXPECT_THROW(cfg.validate(), ParameterError);
  EXPECT_THROW(load_run_config("/nonexistent.cfg"), IoError);
}

TEST(RunConfigTest, ProjectsOntoNetworkLossAndTrainOptions) {
  RunConfig cfg;
  cfg.variant = nn::Variant::kNet4;
  cfg.seed = 11;
  EXPECT_EQ(cfg.network().seed, 11u);
  EXPECT_EQ(cfg.network().variant, nn::Variant::kNet4);
  EXPECT_FALSE(cfg.loss().fft_enabled);
  EXPECT_EQ(cfg.train_options().out_dir, fs::path("runs/default"));
  EXPECT_EQ(cfg.train_options().steps, 2000u);
}

}  // namespace
}  // namespace tanet::io
