// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "tanet/data/image.hpp"

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string output;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(TANET_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("tanet_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string q(const fs::path& p) { return "'" + p.string() + "'"; }
  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, ParamsReportsDeskAndFullScale) {
  const CliRun desk = run("params");
  EXPECT_EQ(desk.code, 0);
  EXPECT_NE(desk.output.find("params 1241705"), std::string::npos) << desk.output;
  const CliRun full = run("params --full-scale");
  EXPECT_EQ(full.code, 0);
  EXPECT_NE(full.output.find("params 8985517"), std::string::npos) << full.output;
}

TEST_F(CliTest, ShippedConfigsParse) {
  const CliRun desk = run(std::string("params -c ") + TANET_CONFIG_DIR + "/desk.cfg");
  EXPECT_EQ(desk.code, 0) << desk.output;
  EXPECT_NE(desk.output.find("params 1241705"), std::string::npos);
  const CliRun full = run(std::string("params -c ") + TANET_CONFIG_DIR + "/full_scale.cfg");
  EXPECT_EQ(full.code, 0) << full.output;
  EXPECT_NE(full.output.find("params 8985517"), std::string::npos);
}

TEST_F(CliTest, UsageAndIoErrorsMapToExitCodes) {
  EXPECT_EQ(run("").code, 3);
  EXPECT_EQ(run("frobnicate").code, 3);
  EXPECT_EQ(run("params --set bogus=1").code, 3);
  EXPECT_EQ(run("params --set crop=30").code, 3);
  EXPECT_EQ(run("synth --clean-dir " + q(dir_ / "missing") + " --out-dir " + q(dir_ / "x")).code, 2);
  EXPECT_EQ(run("params -c " + q(dir_ / "missing.cfg")).code, 2);
  EXPECT_EQ(run("restore --checkpoint " + q(dir_ / "none.tant") + " --input a.png --output b.png").code, 4);
}

TEST_F(CliTest, PipelineFromScenesToIdentityRestoreAndEval) {
  ASSERT_EQ(run("scenes --out " + q(dir_ / "clean") + " --count 4 --size 32 --seed 1").code, 0);
  const CliRun synth = run("synth --clean-dir " + q(dir_ / "clean") + " --out-dir " + q(dir_ / "data") +
                        " --per-kind 4 --split 0.75");
  ASSERT_EQ(synth.code, 0) << synth.output;
  EXPECT_TRUE(fs::exists(dir_ / "data" / "train.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "data" / "degraded" / "snow_0003.png"));

  const CliRun train = run("train --set steps=0 --set base_channels=2 --set num_tabs=1 --set crop=16"
                        " --set data_dir=" + q(dir_ / "data") + " --set out_dir=" + q(dir_ / "run"));
  ASSERT_EQ(train.code, 0) << train.output;
  EXPECT_NE(train.output.find("steps = 0"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "model.tant"));
  EXPECT_NE(slurp(dir_ / "run" / "config.txt").find("base_channels = 2"), std::string::npos);

  const fs::path input = dir_ / "data" / "degraded" / "rain_0001.png";
  const CliRun restore = run("restore --checkpoint " + q(dir_ / "run" / "model.tant") + " --input " +
                          q(input) + " --output " + q(dir_ / "restored.png"));
  ASSERT_EQ(restore.code, 0) << restore.output;
  const auto a = tanet::data::read_image(input), b = tanet::data::read_image(dir_ / "restored.png");
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);

  const CliRun eval = run("eval --no-timing --checkpoint " + q(dir_ / "run" / "model.tant") +
                       " --manifest " + q(dir_ / "data" / "test.txt") + " --out-dir " + q(dir_ / "ev"));
  ASSERT_EQ(eval.code, 0) << eval.output;
  for (const char* col : {"psnr_restored", "psnr_degraded", "delta", "haze", "rain", "snow"})
    EXPECT_NE(eval.output.find(col), std::string::npos) << col;
  EXPECT_TRUE(fs::exists(dir_ / "ev" / "eval.csv"));

  std::ofstream(dir_ / "broken.tant") << "TANTgarbage";
  EXPECT_EQ(run("eval --checkpoint " + q(dir_ / "broken.tant") + " --manifest " +
                q(dir_ / "data" / "test.txt")).code, 4);
}

TEST_F(CliTest, GradcheckPassesOnTinyWidth) {
  const CliRun r = run("gradcheck --set base_channels=2");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
}

}  // namespace
