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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "tvgan/config.hpp"
#include "tvgan/trainer.hpp"

namespace tvgan {
namespace {

namespace fs = std::filesystem;

TEST(ConfigTest, DefaultsAndTextRoundTrip) {
  TrainConfig c;
  EXPECT_EQ(c.epochs, 120);
  EXPECT_EQ(c.batch_size, 40);
  EXPECT_EQ(c.latent_dim, 100);
  EXPECT_DOUBLE_EQ(c.learning_rate, 2e-4);
  EXPECT_DOUBLE_EQ(c.adam_beta1, 0.5);
  c.lambda_tv = 0.123456789012345;
  c.dataset_path = "/data/m.txt";
  TrainConfig back;
  apply_config_text(back, config_to_text(c));
  EXPECT_EQ(config_to_text(back), config_to_text(c));
  EXPECT_EQ(back.lambda_tv, c.lambda_tv);
}

TEST(ConfigTest, ParsesCommentsAndRejectsUnknownKeys) {
  TrainConfig c;
  apply_config_text(c, "# run\n\n  epochs = 7\nseed=42\n");
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.seed, 42u);
  try {
    apply_config_text(c, "epochs=3\nlamda_tv=1\n", "run.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("run.cfg:2"), std::string::npos) << m;
    EXPECT_NE(m.find("lambda_tv"), std::string::npos) << m;  // the valid keys are listed
  }
  EXPECT_THROW(apply_config_text(c, "epochs=three\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "epochs\n"), ConfigError);
}

TEST(ConfigTest, ValidationNamesTheFlag) {
  TrainConfig c;
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("--dataset_path"), std::string::npos);
  }
  c.dataset_path = "x";
  c.output_dir = "y";
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& t) { t.epochs = 0; }, [](TrainConfig& t) { t.batch_size = 1; },
           [](TrainConfig& t) { t.lambda_tv = -1; }, [](TrainConfig& t) { t.image_size = 48; },
           [](TrainConfig& t) { t.precision = 16; }, [](TrainConfig& t) { t.generator_objective = "wgan"; }}) {
    TrainConfig bad = c;
    mutate(bad);
    EXPECT_THROW(bad.validate(), ConfigError);
  }
}

TEST(TrainerHelpersTest, GridCadence) {
  EXPECT_EQ(grid_epochs(120, 10).size(), 13u);
  EXPECT_EQ(grid_epochs(5, 2), (std::vector<std::int64_t>{0, 2, 4}));
  EXPECT_EQ(epoch_stamp(7), "007");
  EXPECT_EQ(epoch_stamp(120), "120");
}

TEST(TrainerHelpersTest, LogRowFormat) {
  const TrainLogRow r{3, 17, 1.25, 0.5, 0.1, 42};
  EXPECT_EQ(format_log_row(r), "3,17,1.25,0.5,0.10000000000000001,42");
  EXPECT_EQ(std::string(kLogHeader), "epoch,iter,d_loss,g_loss,tv_term,wall_ms");
}

TEST(TrainerHelpersTest, TileImages) {
  std::vector<Image> imgs(6, Image(2, 3, -1.0));
  imgs[5] = Image(2, 3, 1.0);
  const auto grid = tile_images(imgs, 4);
  EXPECT_EQ(grid.width, 12u);
  EXPECT_EQ(grid.height, 4u);
  EXPECT_EQ(grid.at(2, 3), 255);  // image 5 sits in row 1, column 1
  EXPECT_EQ(grid.at(0, 0), 0);
}

TEST(TrainerHelpersTest, StreamsAreIndependent) {
  EXPECT_NE(detail::stream_seed(0, 1), detail::stream_seed(0, 2));
  EXPECT_NE(detail::stream_seed(0, 1), detail::stream_seed(1, 1));
  EXPECT_EQ(detail::stream_seed(9, 3), detail::stream_seed(9, 3));
}

class TrainerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    RidgeSynthConfig cfg;
    cfg.n_images = 50;
    cfg.size = 8;
    cfg.seed = 5;
    synth_ridges(cfg, root() / "data");
  }
  static void TearDownTestSuite() { fs::remove_all(root()); }
  static fs::path root() { return fs::temp_directory_path() / "tvgan_trainer_test"; }

  TrainConfig config(const std::string& name) const {
    TrainConfig c;
    c.dataset_path = (root() / "data" / "manifest.txt").string();
    c.output_dir = (root() / name).string();
    c.image_size = 8;
    c.base_channels = 2;
    c.latent_dim = 4;
    c.batch_size = 16;
    c.epochs = 3;
    c.sample_grid_every_n_epochs = 2;
    c.precision = 64;
    return c;
  }
};

TEST_F(TrainerTest, SmokeRunProducesOutputs) {
  const auto c = config("smoke");
  const auto summary = run_training(c);
  EXPECT_EQ(summary.epochs_run, 3);
  EXPECT_EQ(summary.rows, 3u * (50 / 16));
  std::ifstream log(summary.log_path);
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, kLogHeader);
  std::size_t rows = 0;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, summary.rows);
  for (const char* f : {"samples_epoch_000.png", "samples_first_epoch.png", "samples_epoch_002.png",
                        "checkpoint_epoch_002.ckpt", "checkpoint_final.ckpt", "state_final.state",
                        "effective_config.txt"}) {
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / f)) << f;
  }
  const auto grid = read_image(fs::path(c.output_dir) / "samples_epoch_002.png");
  EXPECT_EQ(grid.width, 32u);
  EXPECT_EQ(grid.height, 32u);
}

TEST_F(TrainerTest, FirstIterationNearChanceLevel) {
  Trainer<double> t(config("chance"));
  const auto rows = t.train_epoch(1);
  ASSERT_FALSE(rows.empty());
  EXPECT_NEAR(rows.front().d_loss, 2 * std::log(2.0), 0.15 * 2 * std::log(2.0));
  EXPECT_EQ(rows.front().iteration, 0);
  EXPECT_EQ(rows.back().iteration, std::int64_t(rows.size()) - 1);
}

TEST_F(TrainerTest, OptimizerStepsAndGradientHygiene) {
  auto c = config("steps");
  c.d_steps_per_g_step = 3;
  Trainer<double> t(c);
  const auto d_before = t.discriminator().params().content_hash();
  const auto g_before = t.generator().params().content_hash();
  t.train_epoch(1);
  EXPECT_EQ(t.generator_adam().step, 3);
  EXPECT_EQ(t.discriminator_adam().step, 9);
  EXPECT_NE(t.discriminator().params().content_hash(), d_before);
  EXPECT_NE(t.generator().params().content_hash(), g_before);
  for (const auto& p : t.discriminator().params().params()) EXPECT_FALSE(p.tensor.has_grad()) << p.name;
}

TEST_F(TrainerTest, SameSeedSameParameters) {
  Trainer<double> a(config("seed_a")), b(config("seed_b"));
  a.train_epoch(1);
  b.train_epoch(1);
  EXPECT_EQ(a.generator().params().content_hash(), b.generator().params().content_hash());
  auto c = config("seed_c");
  c.seed = 1;
  Trainer<double> other(c);
  other.train_epoch(1);
  EXPECT_NE(a.generator().params().content_hash(), other.generator().params().content_hash());
}

TEST_F(TrainerTest, NonFiniteLossIsReported) {
  Trainer<double> t(config("nan"));
  t.discriminator().params().params().back().tensor.mutable_value()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    t.train_epoch(1);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("discriminator loss"), std::string::npos) << e.what();
  }
}

TEST_F(TrainerTest, StartupErrors) {
  auto c = config("startup");
  c.batch_size = 64;  // more than the 50 images
  EXPECT_THROW(Trainer<double>{c}, DataError);
  c = config("startup");
  c.dataset_path = (root() / "missing.txt").string();
  EXPECT_THROW(Trainer<double>{c}, DataError);
  c = config("startup");
  c.dataset_path.clear();
  EXPECT_THROW(Trainer<double>{c}, ConfigError);
  c = config("startup");
  std::ofstream(root() / "a_file") << "x";
  c.output_dir = (root() / "a_file" / "sub").string();
  EXPECT_THROW(Trainer<double>{c}, DataError);
}

TEST_F(TrainerTest, ResumeContinuesIdentically) {
  auto full = config("resume_full");
  full.epochs = 4;
  run_training(full);
  auto half = config("resume_half");
  half.epochs = 4;
  half.resume_from = (fs::path(full.output_dir) / "state_epoch_002.state").string();
  run_training(half);
  auto bytes = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  EXPECT_EQ(bytes(fs::path(full.output_dir) / "checkpoint_final.ckpt"),
            bytes(fs::path(half.output_dir) / "checkpoint_final.ckpt"));
}

}  // namespace
}  // namespace tvgan
