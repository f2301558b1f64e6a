// Copyright (c) 2026, The tvgan Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tvgan/data.hpp"
#include "tvgan/image_io.hpp"

#ifndef TVGAN_CLI_PATH
#error "TVGAN_CLI_PATH must point at the tvgan executable"
#endif

namespace tvgan {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(TVGAN_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(root());
    const auto r = run("synth --output_dir " + (root() / "data").string() + " --n_images 24 --size 8 --seed 3");
    ASSERT_EQ(r.code, 0) << r.out;
    std::ofstream(root() / "tiny.cfg") << "# tiny model\nimage_size=8\nbase_channels=2\nlatent_dim=4\n"
                                       << "batch_size=8\nepochs=2\nsample_grid_every_n_epochs=1\n"
                                       << "dataset_path=" << (root() / "data" / "manifest.txt").string() << "\n";
    const auto t = run("train --config " + (root() / "tiny.cfg").string() + " --output_dir " + (root() / "run").string());
    ASSERT_EQ(t.code, 0) << t.out;
  }
  static void TearDownTestSuite() { fs::remove_all(root()); }
  static fs::path root() { return fs::temp_directory_path() / "tvgan_cli_test"; }
  static std::string arch() { return " --config " + (root() / "tiny.cfg").string(); }
  static std::string ckpt() { return (root() / "run" / "checkpoint_final.ckpt").string(); }
};

TEST_F(CliTest, HelpExitsCleanly) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train"), std::string::npos);
  EXPECT_EQ(run("train --help").code, 0);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  const auto r = run("train --output_dir " + (root() / "x").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("--dataset_path"), std::string::npos) << r.out;
  EXPECT_EQ(run("train --config " + (root() / "tiny.cfg").string() + " --output_dir " + (root() / "x").string() +
                " --epochs zero")
                .code,
            2);
}

TEST_F(CliTest, TrainFlagsOverrideConfigFile) {
  const auto out = root() / "override";
  const auto r = run("train --config " + (root() / "tiny.cfg").string() + " --epochs 1 --seed 9 --output_dir " +
                     out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto eff = slurp(out / "effective_config.txt");
  EXPECT_NE(eff.find("epochs=1\n"), std::string::npos);
  EXPECT_NE(eff.find("seed=9\n"), std::string::npos);
  EXPECT_NE(eff.find("base_channels=2\n"), std::string::npos);
  EXPECT_NE(r.out.find("rows=3"), std::string::npos) << r.out;
}

TEST_F(CliTest, TrainWritesExpectedFiles) {
  for (const char* f : {"train_log.csv", "samples_epoch_000.png", "samples_epoch_001.png", "samples_epoch_002.png",
                        "checkpoint_epoch_001.ckpt", "checkpoint_final.ckpt", "effective_config.txt"}) {
    EXPECT_TRUE(fs::exists(root() / "run" / f)) << f;
  }
}

TEST_F(CliTest, GenerateGridAndDeterminism) {
  const auto a = root() / "gen_a", b = root() / "gen_b";
  ASSERT_EQ(run("generate --checkpoint " + ckpt() + arch() + " --n 8 --seed 5 --output_dir " + a.string()).code, 0);
  ASSERT_EQ(run("generate --checkpoint " + ckpt() + arch() + " --n 8 --seed 5 --output_dir " + b.string()).code, 0);
  const auto grid = read_image(a / "grid.png");
  EXPECT_EQ(grid.width, 4u * 8);
  EXPECT_EQ(grid.height, 2u * 8);
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%04d.png", i);
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  EXPECT_TRUE(fs::exists(a / "effective_config.txt"));
}

TEST_F(CliTest, GenerateZeroImages) {
  const auto d = root() / "gen_zero";
  const auto r = run("generate --checkpoint " + ckpt() + arch() + " --n 0 --output_dir " + d.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_FALSE(fs::exists(d / "grid.png"));
  EXPECT_FALSE(fs::exists(d / "sample_0000.png"));
}

TEST_F(CliTest, GenerateRejectsWrongArchitecture) {
  const auto r = run("generate --checkpoint " + ckpt() + arch() + " --base_channels 3 --output_dir " +
                     (root() / "gen_bad").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("fingerprint"), std::string::npos) << r.out;
}

TEST_F(CliTest, TvOfConstantAndStripedImages) {
  write_png(root() / "flat.png", GrayImage(5, 4, 77));
  const auto flat = run("tv " + (root() / "flat.png").string());
  EXPECT_EQ(flat.code, 0);
  EXPECT_NE(flat.out.find("tv=0 raw=0 height=4 width=5"), std::string::npos) << flat.out;
  GrayImage stripes(4, 1);
  stripes.pixels = {0, 255, 0, 255};
  write_png(root() / "stripes.png", stripes);
  const auto s = run("tv --image " + (root() / "stripes.png").string());
  EXPECT_NE(s.out.find("tv=1.5 raw=6 "), std::string::npos) << s.out;
}

TEST_F(CliTest, FidOfIdenticalSetsIsZero) {
  const auto data = (root() / "data").string();
  const auto r = run("fid --real " + data + " --generated " + data + " --extractor dct:8 --image_size 8");
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_EQ(r.out.rfind("fid=", 0), 0u) << r.out;
  EXPECT_LT(std::abs(std::stod(r.out.substr(4))), 1e-6) << r.out;
  EXPECT_NE(r.out.find("not-comparable-to-inception-v3-fid"), std::string::npos);
}

TEST_F(CliTest, FidFromGeneratorCheckpoint) {
  const auto r = run("fid --real " + (root() / "data" / "manifest.txt").string() + " --generator_checkpoint " +
                     ckpt() + arch() + " --n 40 --extractor dct:8");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("n_gen=40"), std::string::npos) << r.out;
  EXPECT_EQ(run("fid --real " + (root() / "data").string()).code, 2);
}

TEST_F(CliTest, MalformedImageIsADataError) {
  const auto dir = root() / "bad_images";
  fs::create_directories(dir);
  std::ofstream(dir / "broken.png") << "not a png";
  const auto r = run("prepare-data --image_dir " + dir.string() + " --recipe none");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("broken.png"), std::string::npos) << r.out;
}

TEST_F(CliTest, PrepareDataWritesManifest) {
  const auto dir = root() / "prep";
  fs::create_directories(dir);
  write_png(dir / "a.png", GrayImage(640, 480, 9));
  const auto r = run("prepare-data --image_dir " + dir.string() + " --recipe polyu --seed 4");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto m = read_manifest(dir / "manifest.txt");
  EXPECT_EQ(m.entries.size(), 1u);
  EXPECT_EQ(m.shuffle_seed, 4u);
  write_png(dir / "small.png", GrayImage(300, 300));
  const auto bad = run("prepare-data --image_dir " + dir.string() + " --recipe fvc2006");
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.out.find("small.png"), std::string::npos) << bad.out;
}

}  // namespace
}  // namespace tvgan
