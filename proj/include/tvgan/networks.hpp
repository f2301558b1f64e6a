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

// DC-GAN style generator and discriminator.
//
// Generator: z (B, latent) is viewed as a 1x1 map and pushed through five
// transposed-convolution stages. The first stage projects to 4x4 (k4 s1 p0);
// each further stage either doubles resolution (k4 s2 p1) or, for outputs
// smaller than 64, keeps it (k3 s1 p1). Channels 8b -> 4b -> 2b -> b -> 1.
// Stages 1-4 are followed by batch norm + ReLU, stage 5 by tanh.
//
// Discriminator: four convolution stages with channels b -> 2b -> 4b -> 8b,
// halving resolution (k4 s2 p1) until 4x4 and keeping it (k3 s1 p1) after
// that; batch norm on stages 2-4; leaky ReLU; then one linear layer to a
// logit and a sigmoid.

#pragma once

#include <bit>
#include <cstdint>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tvgan/ops.hpp"
#include "tvgan/tensor.hpp"

namespace tvgan {

struct ConvStage {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride;
  std::size_t padding;

  bool operator==(const ConvStage&) const = default;
};

inline constexpr std::size_t kGeneratorStages = 5;
inline constexpr std::size_t kDiscriminatorStages = 4;

namespace detail {

inline std::size_t log2_exact(std::size_t n, const std::string& what) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ConfigError(what + " must be a power of two, got " + std::to_string(n));
  }
  return static_cast<std::size_t>(std::countr_zero(n));
}

inline std::string canonical(const std::vector<ConvStage>& stages) {
  std::ostringstream os;
  for (const auto& s : stages) {
    os << '[' << s.in_channels << ',' << s.out_channels << ',' << s.kernel << ',' << s.stride
       << ',' << s.padding << ']';
  }
  return os.str();
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct GeneratorSpec {
  std::size_t latent_dim = 100;
  std::size_t base_channels = 64;
  std::size_t output_size = 64;
  std::vector<ConvStage> stages;

  /// Builds the stage plan described at the top of this file. output_size
  /// must be a power of two in [8, 64].
  static GeneratorSpec dcgan(std::size_t latent_dim, std::size_t base_channels,
                             std::size_t output_size) {
    const std::size_t lg = detail::log2_exact(output_size, "generator output_size");
    if (lg < 3 || lg > 6) throw ConfigError("generator output_size must be in [8, 64]");
    if (latent_dim == 0 || base_channels == 0) throw ConfigError("generator dims must be positive");
    GeneratorSpec spec{latent_dim, base_channels, output_size, {}};
    const std::size_t b = base_channels;
    const std::size_t channels[] = {latent_dim, 8 * b, 4 * b, 2 * b, b, 1};
    std::size_t upsample = lg - 2;  // 4 -> output_size
    spec.stages.push_back({channels[0], channels[1], 4, 1, 0});
    for (std::size_t i = 1; i < kGeneratorStages; ++i) {
      // Size-preserving stages go first so the final stages work at full resolution.
      const bool up = (kGeneratorStages - i) <= upsample;
      spec.stages.push_back(up ? ConvStage{channels[i], channels[i + 1], 4, 2, 1}
                               : ConvStage{channels[i], channels[i + 1], 3, 1, 1});
    }
    spec.validate();
    return spec;
  }

  void validate() const {
    if (stages.size() != kGeneratorStages) {
      throw ConfigError("generator needs exactly 5 stages, got " + std::to_string(stages.size()));
    }
    if (stages.front().in_channels != latent_dim || stages.back().out_channels != 1) {
      throw ConfigError("generator stages must map latent_dim channels to 1");
    }
    std::size_t size = 1;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const auto& s = stages[i];
      if (i > 0 && s.in_channels != stages[i - 1].out_channels) {
        throw ConfigError("generator stage " + std::to_string(i + 1) + " channel mismatch");
      }
      if ((size - 1) * s.stride + s.kernel <= 2 * s.padding) {
        throw ConfigError("generator stage " + std::to_string(i + 1) + " collapses the map");
      }
      size = (size - 1) * s.stride + s.kernel - 2 * s.padding;
    }
    if (size != output_size) {
      throw ConfigError("generator stages produce " + std::to_string(size) + "x" +
                        std::to_string(size) + ", expected " + std::to_string(output_size));
    }
  }

  std::string canonical() const {
    return "G:z=" + std::to_string(latent_dim) + ",out=" + std::to_string(output_size) + "," +
           detail::canonical(stages);
  }
};

struct DiscriminatorSpec {
  std::size_t input_size = 64;
  std::size_t base_channels = 64;
  double leaky_slope = 0.2;
  std::vector<ConvStage> stages;
  std::size_t final_size = 4;

  static DiscriminatorSpec dcgan(std::size_t base_channels, std::size_t input_size,
                                 double leaky_slope = 0.2) {
    const std::size_t lg = detail::log2_exact(input_size, "discriminator input_size");
    if (lg < 3 || lg > 6) throw ConfigError("discriminator input_size must be in [8, 64]");
    if (base_channels == 0) throw ConfigError("discriminator base_channels must be positive");
    DiscriminatorSpec spec{input_size, base_channels, leaky_slope, {}, 4};
    const std::size_t b = base_channels;
    const std::size_t channels[] = {1, b, 2 * b, 4 * b, 8 * b};
    std::size_t downsample = lg - 2;  // input_size -> 4
    for (std::size_t i = 0; i < kDiscriminatorStages; ++i) {
      const bool down = i < downsample;
      spec.stages.push_back(down ? ConvStage{channels[i], channels[i + 1], 4, 2, 1}
                                 : ConvStage{channels[i], channels[i + 1], 3, 1, 1});
    }
    spec.validate();
    return spec;
  }

  void validate() const {
    if (stages.size() != kDiscriminatorStages) {
      throw ConfigError("discriminator needs exactly 4 conv stages, got " +
                        std::to_string(stages.size()));
    }
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
      throw ConfigError("discriminator leaky slope must lie in [0, 1)");
    }
    if (stages.front().in_channels != 1) throw ConfigError("discriminator input must have 1 channel");
    std::size_t size = input_size;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const auto& s = stages[i];
      if (i > 0 && s.in_channels != stages[i - 1].out_channels) {
        throw ConfigError("discriminator stage " + std::to_string(i + 1) + " channel mismatch");
      }
      if (size + 2 * s.padding < s.kernel) {
        throw ConfigError("discriminator stage " + std::to_string(i + 1) + " kernel too large");
      }
      size = (size + 2 * s.padding - s.kernel) / s.stride + 1;
    }
    if (size != final_size) {
      throw ConfigError("discriminator stages end at " + std::to_string(size) + ", expected " +
                        std::to_string(final_size));
    }
  }

  std::size_t feature_dim() const { return stages.back().out_channels * final_size * final_size; }

  std::string canonical() const {
    std::ostringstream os;
    os << "D:in=" << input_size << ",slope=" << leaky_slope << ',' << detail::canonical(stages)
       << ",fc=" << feature_dim();
    return os.str();
  }
};

/// Both networks of one model. The fingerprint keys checkpoint compatibility.
struct GanSpec {
  GeneratorSpec generator;
  DiscriminatorSpec discriminator;

  static GanSpec dcgan(std::size_t latent_dim, std::size_t base_channels, std::size_t image_size) {
    return {GeneratorSpec::dcgan(latent_dim, base_channels, image_size),
            DiscriminatorSpec::dcgan(base_channels, image_size)};
  }

  std::uint64_t fingerprint() const {
    return detail::fnv1a(generator.canonical() + "|" + discriminator.canonical());
  }
};

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
struct NamedBuffer {
  std::string name;
  Array<T>* array;
};

/// Ordered trainable tensors of one network plus its batch-norm statistics.
/// Names and shapes are a pure function of the spec.
template <typename T>
class NetworkParams {
 public:
  Tensor<T>& add(std::string name, Shape shape) {
    params_.push_back({std::move(name), Tensor<T>(Array<T>(std::move(shape)), true)});
    return params_.back().tensor;
  }

  BatchNormStats<T>& add_stats(const std::string& prefix, std::size_t channels) {
    stats_names_.push_back(prefix);
    stats_.push_back(std::make_unique<BatchNormStats<T>>(channels));
    return *stats_.back();
  }

  std::vector<NamedParam<T>>& params() { return params_; }
  const std::vector<NamedParam<T>>& params() const { return params_; }

  std::vector<NamedBuffer<T>> buffers() const {
    std::vector<NamedBuffer<T>> out;
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      out.push_back({stats_names_[i] + ".running_mean", &stats_[i]->running_mean});
      out.push_back({stats_names_[i] + ".running_var", &stats_[i]->running_var});
    }
    return out;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

  void clear_grads() {
    for (auto& p : params_) p.tensor.clear_grad();
  }

  /// FNV-1a over the raw bytes of every parameter and buffer value.
  std::uint64_t content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const Array<T>& a) {
      const auto* bytes = reinterpret_cast<const char*>(a.data().data());
      h = detail::fnv1a(std::string_view(bytes, a.size() * sizeof(T)), h);
    };
    for (const auto& p : params_) mix(p.tensor.value());
    for (const auto& b : buffers()) mix(*b.array);
    return h;
  }

 private:
  std::vector<NamedParam<T>> params_;
  std::vector<std::string> stats_names_;
  std::vector<std::unique_ptr<BatchNormStats<T>>> stats_;
};

namespace detail {

// Conv/linear weights ~ N(0, 0.02), biases 0, BN gamma ~ N(1, 0.02), beta 0.
template <typename T>
void dcgan_init(NetworkParams<T>& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : params.params()) {
    auto& v = p.tensor.mutable_value();
    const auto& n = p.name;
    const bool is_bias = n.ends_with(".bias") || n.ends_with(".beta");
    if (is_bias) {
      v.fill(T{0});
      continue;
    }
    std::normal_distribution<double> dist(n.ends_with(".gamma") ? 1.0 : 0.0, 0.02);
    for (auto& x : v.data()) x = static_cast<T>(dist(rng));
  }
}

}  // namespace detail

template <typename T>
class Generator {
 public:
  Generator(GeneratorSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t i = 0; i < spec_.stages.size(); ++i) {
      const auto& s = spec_.stages[i];
      const std::string prefix = "generator.stage" + std::to_string(i + 1);
      Stage st;
      st.weight = params_.add(prefix + ".conv.weight", {s.in_channels, s.out_channels, s.kernel, s.kernel});
      st.bias = params_.add(prefix + ".conv.bias", {s.out_channels});
      if (i + 1 < spec_.stages.size()) {
        st.gamma = params_.add(prefix + ".bn.gamma", {s.out_channels});
        st.beta = params_.add(prefix + ".bn.beta", {s.out_channels});
        st.stats = &params_.add_stats(prefix + ".bn", s.out_channels);
      }
      stages_.push_back(st);
    }
    detail::dcgan_init(params_, seed);
  }

  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  const GeneratorSpec& spec() const { return spec_; }
  NetworkParams<T>& params() { return params_; }
  const NetworkParams<T>& params() const { return params_; }

  /// z (B, latent_dim) -> images (B, 1, S, S) in (-1, 1).
  Tensor<T> forward(Tape<T>& tape, const Tensor<T>& z, Mode mode) {
    if (z.shape().size() != 2 || z.dim(1) != spec_.latent_dim) {
      throw DimensionError("generator expects z of shape (B, " + std::to_string(spec_.latent_dim) +
                           "), got " + to_string(z.shape()));
    }
    Tensor<T> h = reshape(tape, z, Shape{z.dim(0), spec_.latent_dim, 1, 1});
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      const auto& s = spec_.stages[i];
      auto& st = stages_[i];
      h = conv_transpose2d(tape, h, st.weight, st.bias, s.stride, s.padding);
      if (st.stats) {
        h = batchnorm2d(tape, h, st.gamma, st.beta, *st.stats, mode);
        h = relu(tape, h);
      } else {
        h = tanh(tape, h);
      }
    }
    return h;
  }

 private:
  struct Stage {
    Tensor<T> weight, bias, gamma, beta;
    BatchNormStats<T>* stats = nullptr;
  };

  GeneratorSpec spec_;
  NetworkParams<T> params_;
  std::vector<Stage> stages_;
};

template <typename T>
class Discriminator {
 public:
  Discriminator(DiscriminatorSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t i = 0; i < spec_.stages.size(); ++i) {
      const auto& s = spec_.stages[i];
      const std::string prefix = "discriminator.stage" + std::to_string(i + 1);
      Stage st;
      st.weight = params_.add(prefix + ".conv.weight", {s.out_channels, s.in_channels, s.kernel, s.kernel});
      st.bias = params_.add(prefix + ".conv.bias", {s.out_channels});
      if (i > 0) {
        st.gamma = params_.add(prefix + ".bn.gamma", {s.out_channels});
        st.beta = params_.add(prefix + ".bn.beta", {s.out_channels});
        st.stats = &params_.add_stats(prefix + ".bn", s.out_channels);
      }
      stages_.push_back(st);
    }
    fc_weight_ = params_.add("discriminator.fc.weight", {1, spec_.feature_dim()});
    fc_bias_ = params_.add("discriminator.fc.bias", {1});
    detail::dcgan_init(params_, seed);
  }

  Discriminator(const Discriminator&) = delete;
  Discriminator& operator=(const Discriminator&) = delete;

  const DiscriminatorSpec& spec() const { return spec_; }
  NetworkParams<T>& params() { return params_; }
  const NetworkParams<T>& params() const { return params_; }

  /// Convolutional trunk output flattened to (B, feature_dim).
  Tensor<T> features(Tape<T>& tape, const Tensor<T>& images, Mode mode) {
    const auto& sh = images.shape();
    if (sh.size() != 4 || sh[1] != 1 || sh[2] != spec_.input_size || sh[3] != spec_.input_size) {
      throw DimensionError("discriminator expects images of shape (B, 1, " +
                           std::to_string(spec_.input_size) + ", " +
                           std::to_string(spec_.input_size) + "), got " + to_string(sh));
    }
    const T slope = static_cast<T>(spec_.leaky_slope);
    Tensor<T> h = images;
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      const auto& s = spec_.stages[i];
      auto& st = stages_[i];
      h = conv2d(tape, h, st.weight, st.bias, s.stride, s.padding);
      if (st.stats) h = batchnorm2d(tape, h, st.gamma, st.beta, *st.stats, mode);
      h = leaky_relu(tape, h, slope);
    }
    return flatten(tape, h);
  }

  /// images (B, 1, S, S) -> probabilities (B).
  Tensor<T> forward(Tape<T>& tape, const Tensor<T>& images, Mode mode) {
    Tensor<T> h = linear(tape, features(tape, images, mode), fc_weight_, fc_bias_);
    h = sigmoid(tape, h);
    return reshape(tape, h, Shape{images.dim(0)});
  }

 private:
  struct Stage {
    Tensor<T> weight, bias, gamma, beta;
    BatchNormStats<T>* stats = nullptr;
  };

  DiscriminatorSpec spec_;
  NetworkParams<T> params_;
  std::vector<Stage> stages_;
  Tensor<T> fc_weight_, fc_bias_;
};

}  // namespace tvgan
