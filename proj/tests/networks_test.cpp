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
#include <random>

#include "support/oracles.hpp"
#include "tvgan/adam.hpp"
#include "tvgan/checkpoint.hpp"
#include "tvgan/losses.hpp"
#include "tvgan/networks.hpp"

namespace tvgan {
namespace {

Tensor<double> normal_z(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return constant(oracle::normal_array({n, d}, rng));
}

TEST(NetworksTest, GeneratorShapesAndRange) {
  for (std::size_t size : {8, 16, 32, 64}) {
    Generator<double> g(GeneratorSpec::dcgan(16, 2, size), 1);
    for (std::size_t B : {1, 7, 40}) {
      Tape<double> tape(false);
      auto y = g.forward(tape, normal_z(B, 16, B), B == 1 ? Mode::eval : Mode::train);
      ASSERT_EQ(y.shape(), (Shape{B, 1, size, size}));
      for (double v : y.value().data()) {
        EXPECT_GT(v, -1.0);
        EXPECT_LT(v, 1.0);
      }
    }
  }
}

TEST(NetworksTest, DefaultGeneratorPlan) {
  const auto spec = GeneratorSpec::dcgan(100, 64, 64);
  ASSERT_EQ(spec.stages.size(), 5u);
  EXPECT_EQ(spec.stages[0].out_channels, 512u);
  EXPECT_EQ(spec.stages[4].out_channels, 1u);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_EQ(spec.stages[i].stride, 2u);
  EXPECT_THROW(GeneratorSpec::dcgan(100, 64, 48), ConfigError);
  EXPECT_THROW(GeneratorSpec::dcgan(100, 64, 128), ConfigError);
}

TEST(NetworksTest, DiscriminatorShapesAndRange) {
  Discriminator<double> d(DiscriminatorSpec::dcgan(4, 32), 2);
  std::mt19937_64 rng(3);
  for (std::size_t B : {2, 7, 40}) {
    Tape<double> tape(false);
    auto p = d.forward(tape, constant(oracle::random_array({B, 1, 32, 32}, rng)), Mode::train);
    ASSERT_EQ(p.shape(), (Shape{B}));
    for (double v : p.value().data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
  Tape<double> tape(false);
  EXPECT_THROW(d.forward(tape, constant(Array<double>(Shape{2, 1, 16, 16})), Mode::train), DimensionError);
}

TEST(NetworksTest, EvalModeIsDeterministic) {
  Generator<double> g(GeneratorSpec::dcgan(8, 2, 16), 4);
  const auto z = normal_z(5, 8, 9);
  Tape<double> t1(false), t2(false);
  EXPECT_TRUE(g.forward(t1, z, Mode::eval).value() == g.forward(t2, z, Mode::eval).value());
}

TEST(NetworksTest, DistinctLatentsGiveDistinctImages) {
  Generator<double> g(GeneratorSpec::dcgan(8, 2, 16), 5);
  const auto z = normal_z(2, 8, 10);
  Tape<double> tape(false);
  auto y = g.forward(tape, z, Mode::eval);
  double diff = 0;
  for (std::size_t i = 0; i < 256; ++i) diff += std::abs(y.value()[i] - y.value()[256 + i]);
  EXPECT_GT(diff, 0.0);
}

TEST(NetworksTest, SameSeedSameParameters) {
  const auto spec = GanSpec::dcgan(8, 2, 16);
  Generator<double> a(spec.generator, 7), b(spec.generator, 7), c(spec.generator, 8);
  EXPECT_EQ(a.params().content_hash(), b.params().content_hash());
  EXPECT_NE(a.params().content_hash(), c.params().content_hash());
}

TEST(NetworksTest, InitializationStatistics) {
  Discriminator<double> d(DiscriminatorSpec::dcgan(64, 64), 11);
  for (const auto& p : d.params().params()) {
    const auto& v = p.tensor.value();
    if (p.name.ends_with(".bias") || p.name.ends_with(".beta")) {
      for (double x : v.data()) EXPECT_EQ(x, 0.0);
      continue;
    }
    if (v.size() < 1000) continue;
    double mean = 0, var = 0;
    for (double x : v.data()) mean += x / double(v.size());
    for (double x : v.data()) var += (x - mean) * (x - mean) / double(v.size());
    const double want = p.name.ends_with(".gamma") ? 1.0 : 0.0;
    EXPECT_NEAR(mean, want, 5 * 0.02 / std::sqrt(double(v.size()))) << p.name;
    EXPECT_NEAR(std::sqrt(var), 0.02, 0.002) << p.name;
  }
}

TEST(NetworksTest, FingerprintTracksArchitecture) {
  EXPECT_EQ(GanSpec::dcgan(8, 2, 16).fingerprint(), GanSpec::dcgan(8, 2, 16).fingerprint());
  EXPECT_NE(GanSpec::dcgan(8, 2, 16).fingerprint(), GanSpec::dcgan(8, 4, 16).fingerprint());
  EXPECT_NE(GanSpec::dcgan(8, 2, 16).fingerprint(), GanSpec::dcgan(9, 2, 16).fingerprint());
}

TEST(NetworksTest, CheckpointRoundTripAndMismatch) {
  const auto dir = std::filesystem::temp_directory_path() / "tvgan_networks_test";
  std::filesystem::create_directories(dir);
  const auto spec = GanSpec::dcgan(8, 2, 16);
  Generator<float> g(spec.generator, 1), g2(spec.generator, 2);
  Discriminator<float> d(spec.discriminator, 3), d2(spec.discriminator, 4);
  save_checkpoint(dir / "g.ckpt", spec, g, d);
  auto back = read_checkpoint(dir / "g.ckpt", spec);
  restore_network(back, g2.params());
  restore_network(back, d2.params());
  EXPECT_EQ(g.params().content_hash(), g2.params().content_hash());
  EXPECT_EQ(d.params().content_hash(), d2.params().content_hash());
  EXPECT_THROW(read_checkpoint(dir / "g.ckpt", GanSpec::dcgan(8, 4, 16)), FingerprintMismatch);
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// losses

TEST(LossesTest, DiscriminatorLossExamples) {
  Tape<double> tape(false);
  const double e1 = 1.0 / std::exp(1.0);
  auto a = discriminator_loss(tape, constant(Array<double>(Shape{3}, e1)), constant(Array<double>(Shape{3}, 0.0)));
  EXPECT_NEAR(a.item(), 1.0, 1e-6);
  auto b = discriminator_loss(tape, constant(Array<double>(Shape{4}, 0.5)), constant(Array<double>(Shape{4}, 0.5)));
  EXPECT_NEAR(b.item(), 2.0 * std::log(2.0), 1e-15);
}

TEST(LossesTest, GeneratorObjectives) {
  Tape<double> tape(false);
  const auto half = constant(Array<double>(Shape{4}, 0.5));
  EXPECT_NEAR(generator_loss_nonsaturating(tape, half).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(generator_loss_saturating(tape, half).item(), -std::log(2.0), 1e-15);
}

TEST(LossesTest, TvTermDecomposition) {
  std::mt19937_64 rng(12);
  const auto imgs = constant(oracle::random_array({3, 1, 8, 8}, rng));
  const auto p = constant(oracle::random_array({3}, rng, 0.1, 0.9));
  Tape<double> tape(false);
  const auto plain = generator_loss_nonsaturating(tape, p).item();
  const auto zero = generator_loss_tv(tape, p, imgs, 0.0);
  EXPECT_EQ(zero.total.item(), plain);
  for (double lambda : {1e-4, 0.5, 3.0}) {
    const auto l = generator_loss_tv(tape, p, imgs, lambda);
    EXPECT_NEAR(l.total.item(), plain + lambda * l.tv.total.item(), 1e-14);
  }
  EXPECT_THROW(generator_loss_tv(tape, p, imgs, -1.0), ConfigError);
  EXPECT_THROW(generator_loss_tv(tape, p, imgs, std::nan("")), ConfigError);
}

TEST(LossesTest, CompositeGradientsMatchFiniteDifferences) {
  const auto spec = GanSpec::dcgan(8, 2, 16);
  Generator<double> g(spec.generator, 1);
  Discriminator<double> d(spec.discriminator, 2);
  std::mt19937_64 rng(13);
  // Unit-scale parameters keep activations away from the leaky-relu kink.
  for (auto* net : {&g.params(), &d.params()})
    for (auto& p : net->params())
      for (auto& v : p.tensor.mutable_value().data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const auto z = constant(oracle::normal_array({4, 8}, rng));
  // Conv biases followed by batch norm cancel out of the loss; their gradient
  // is zero and checked separately.
  std::vector<std::pair<std::string, Tensor<double>>> leaves;
  std::vector<Tensor<double>> cancelled;
  for (auto& p : g.params().params()) {
    const bool before_bn = p.name.ends_with(".conv.bias") && !p.name.starts_with("generator.stage5");
    if (before_bn) cancelled.push_back(p.tensor);
    else leaves.emplace_back(p.name, p.tensor);
  }
  auto res = oracle::check_gradients(
      [&](Tape<double>& t) {
        auto fake = g.forward(t, z, Mode::train);
        return generator_loss_tv(t, d.forward(t, fake, Mode::train), fake, 0.5).total;
      },
      leaves, rng, 12);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
  for (auto& t : cancelled) {
    if (!t.has_grad()) continue;
    for (double v : t.grad().data()) EXPECT_LT(std::abs(v), 1e-9);
  }
}

// ---------------------------------------------------------------------------
// adam

TEST(AdamTest, FirstStepMovesByLearningRate) {
  NetworkParams<double> params;
  auto& w = params.add("w", {3});
  w.mutable_value() = Array<double>(Shape{3}, std::vector<double>{1, 2, 3});
  w.grad_buffer() = Array<double>(Shape{3}, std::vector<double>{0.5, -2, 0});
  AdamState<double> state(params);
  adam_step(params, state, AdamHyper{0.1, 0.5, 0.999, 1e-8});
  EXPECT_NEAR(w.value()[0], 0.9, 1e-7);
  EXPECT_NEAR(w.value()[1], 2.1, 1e-7);
  EXPECT_EQ(w.value()[2], 3.0);
  EXPECT_EQ(state.step, 1);
}

TEST(AdamTest, MatchesScalarReference) {
  NetworkParams<double> params;
  auto& w = params.add("w", {1});
  AdamState<double> state(params);
  const AdamHyper h{0.01, 0.9, 0.99, 1e-8};
  double x = 0.0, m = 0, v = 0;
  w.mutable_value()[0] = x;
  for (int t = 1; t <= 20; ++t) {
    const double g = std::sin(double(t)) + 0.3;
    w.grad_buffer() = Array<double>(Shape{1}, g);
    adam_step(params, state, h);
    m = 0.9 * m + 0.1 * g;
    v = 0.99 * v + 0.01 * g * g;
    x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.99, t))) + 1e-8);
    EXPECT_NEAR(w.value()[0], x, 1e-14);
  }
}

TEST(AdamTest, MissingGradientRejected) {
  NetworkParams<double> params;
  params.add("w", {2});
  AdamState<double> state(params);
  EXPECT_THROW(adam_step(params, state, AdamHyper{}), std::logic_error);
  EXPECT_EQ(state.step, 0);
}

}  // namespace
}  // namespace tvgan
