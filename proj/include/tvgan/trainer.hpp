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

// Alternating discriminator/generator training with CSV logging, sample grids,
// checkpoints and resumable state.
//
// Output directory layout:
//   effective_config.txt
//   train_log.csv                   epoch,iter,d_loss,g_loss,tv_term,wall_ms
//   samples_epoch_000.png           before any update
//   samples_first_epoch.png         after epoch 1 (when 1 is not a grid epoch)
//   samples_epoch_NNN.png           every sample_grid_every_n_epochs epochs
//   checkpoint_epoch_NNN.ckpt       alongside each grid after epoch 0
//   state_epoch_NNN.state
//   checkpoint_final.ckpt / state_final.state

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tvgan/adam.hpp"
#include "tvgan/checkpoint.hpp"
#include "tvgan/config.hpp"
#include "tvgan/data.hpp"
#include "tvgan/image_io.hpp"
#include "tvgan/losses.hpp"
#include "tvgan/networks.hpp"
#include "tvgan/parallel.hpp"

namespace tvgan {

namespace detail {

// Independent generator seeds for initialization and latent streams.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
}

}  // namespace detail

struct TrainLogRow {
  std::int64_t epoch = 0;      // 1-based
  std::int64_t iteration = 0;  // global, 0-based
  double d_loss = 0;
  double g_loss = 0;   // adversarial + lambda_tv * tv_term
  double tv_term = 0;  // unweighted batch-mean normalized TV of the generated batch
  std::int64_t wall_ms = 0;
};

inline constexpr const char* kLogHeader = "epoch,iter,d_loss,g_loss,tv_term,wall_ms";

inline std::string format_log_row(const TrainLogRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g,%.17g,%lld", static_cast<long long>(r.epoch),
                static_cast<long long>(r.iteration), r.d_loss, r.g_loss, r.tv_term,
                static_cast<long long>(r.wall_ms));
  return buf;
}

inline std::string epoch_stamp(std::int64_t epoch) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03lld", static_cast<long long>(epoch));
  return buf;
}

/// Epochs at which a grid is written: 0, every `cadence` epochs, and never past `epochs`.
inline std::vector<std::int64_t> grid_epochs(std::int64_t epochs, std::int64_t cadence) {
  std::vector<std::int64_t> out;
  for (std::int64_t e = 0; e <= epochs; e += cadence) out.push_back(e);
  return out;
}

/// Standard normal (n, latent) draws.
template <typename T>
Array<T> sample_latent(std::size_t n, std::size_t latent_dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Array<T> z(Shape{n, latent_dim});
  for (auto& v : z.data()) v = static_cast<T>(normal(rng));
  return z;
}

/// Tiles images (all S x S) into `cols` columns, row-major, values mapped by to_pixel.
inline GrayImage tile_images(const std::vector<Image>& images, std::size_t cols) {
  if (images.empty()) throw DimensionError("cannot tile an empty image list");
  const std::size_t h = images.front().height, w = images.front().width;
  const std::size_t rows = (images.size() + cols - 1) / cols;
  GrayImage grid(cols * w, rows * h, 0);
  for (std::size_t k = 0; k < images.size(); ++k) {
    const auto& img = images[k];
    if (img.height != h || img.width != w) throw DimensionError("tile_images: size mismatch");
    const std::size_t r0 = (k / cols) * h, c0 = (k % cols) * w;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) grid.at(r0 + r, c0 + c) = to_pixel(img.at(r, c));
    }
  }
  return grid;
}

/// Unstacks a (B, 1, H, W) array.
template <typename T>
std::vector<Image> unstack_images(const Array<T>& batch) {
  const std::size_t n = batch.dim(0), h = batch.dim(2), w = batch.dim(3);
  std::vector<Image> out;
  for (std::size_t b = 0; b < n; ++b) {
    Image img(h, w);
    for (std::size_t i = 0; i < h * w; ++i) img.values[i] = static_cast<double>(batch[b * h * w + i]);
    out.push_back(std::move(img));
  }
  return out;
}

/// Eval-mode generator outputs for the given latent rows, computed in chunks.
template <typename T>
std::vector<Image> generate_images(Generator<T>& generator, const Array<T>& z, std::size_t chunk = 64) {
  const std::size_t n = z.dim(0), latent = z.dim(1);
  std::vector<Image> out;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    Array<T> part(Shape{m, latent});
    std::copy(z.data().begin() + static_cast<std::ptrdiff_t>(start * latent),
              z.data().begin() + static_cast<std::ptrdiff_t>((start + m) * latent), part.data().begin());
    Tape<T> tape(false);
    auto imgs = unstack_images(generator.forward(tape, constant(std::move(part)), Mode::eval).value());
    for (auto& img : imgs) out.push_back(std::move(img));
  }
  return out;
}

/// `n` eval-mode samples from latents drawn with `seed`.
template <typename T>
std::vector<Image> sample_images(Generator<T>& generator, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  std::mt19937_64 rng(seed);
  return generate_images(generator, sample_latent<T>(n, generator.spec().latent_dim, rng));
}

struct TrainSummary {
  std::int64_t epochs_run = 0;
  std::size_t rows = 0;
  std::filesystem::path log_path;
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> grids;
  std::vector<std::filesystem::path> checkpoints;
};

/// Called after every completed epoch; returning false stops the run early.
using EpochCallback = std::function<bool(std::int64_t epoch)>;

template <typename T>
class Trainer {
 public:
  /// Validates the config, loads the dataset and prepares the output
  /// directory. Startup problems throw ConfigError or DataError.
  explicit Trainer(TrainConfig config)
      : config_(std::move(config)),
        spec_((config_.validate(), config_.gan_spec())),
        generator_(spec_.generator, detail::stream_seed(config_.seed, 1)),
        discriminator_(spec_.discriminator, detail::stream_seed(config_.seed, 2)),
        g_adam_(generator_.params()),
        d_adam_(discriminator_.params()) {
    set_num_threads(static_cast<std::size_t>(config_.threads));
    hyper_ = {config_.learning_rate, config_.adam_beta1, config_.adam_beta2, config_.adam_eps};
    out_ = config_.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(out_, ec);
    if (ec || !std::filesystem::is_directory(out_)) {
      throw DataError("cannot create output directory " + out_.string() + ": " + ec.message());
    }
    {
      std::ofstream probe(out_ / "effective_config.txt", std::ios::trunc);
      if (!probe) throw DataError("output directory " + out_.string() + " is not writable");
      probe << config_to_text(config_);
      if (!probe) throw DataError("output directory " + out_.string() + " is not writable");
    }
    data_ = Dataset::load(config_.dataset_path, static_cast<std::size_t>(config_.image_size));
    if (data_.size() < static_cast<std::size_t>(config_.batch_size)) {
      throw DataError("dataset " + config_.dataset_path + " has " + std::to_string(data_.size()) +
                      " images, fewer than batch_size " + std::to_string(config_.batch_size));
    }
    std::mt19937_64 fixed_rng(detail::stream_seed(config_.seed, 3));
    fixed_z_ = sample_latent<T>(16, spec_.generator.latent_dim, fixed_rng);
    if (!config_.resume_from.empty()) load_state(config_.resume_from);
  }

  const TrainConfig& config() const { return config_; }
  const GanSpec& spec() const { return spec_; }
  Generator<T>& generator() { return generator_; }
  Discriminator<T>& discriminator() { return discriminator_; }
  const Dataset& dataset() const { return data_; }
  const Array<T>& fixed_z() const { return fixed_z_; }
  const AdamState<T>& generator_adam() const { return g_adam_; }
  const AdamState<T>& discriminator_adam() const { return d_adam_; }
  std::int64_t epochs_done() const { return epochs_done_; }
  std::int64_t iteration() const { return iteration_; }
  const std::filesystem::path& output_dir() const { return out_; }
  std::filesystem::path log_path() const { return out_ / "train_log.csv"; }

  /// Runs one epoch (1-based) over the seeded batch order.
  std::vector<TrainLogRow> train_epoch(std::int64_t epoch) {
    auto stream = load_batches<T>(data_, static_cast<std::size_t>(config_.batch_size),
                                  static_cast<std::uint64_t>(epoch));
    std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x7a11u};
    std::mt19937_64 z_rng(seq);
    std::vector<TrainLogRow> rows;
    while (auto batch = stream.next()) {
      rows.push_back(train_iteration(constant(std::move(*batch)), z_rng, epoch));
    }
    epochs_done_ = epoch;
    return rows;
  }

  /// One discriminator phase followed by one generator update.
  TrainLogRow train_iteration(const Tensor<T>& real, std::mt19937_64& z_rng, std::int64_t epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t batch = real.dim(0), latent = spec_.generator.latent_dim;
    TrainLogRow row;
    row.epoch = epoch;
    row.iteration = iteration_;

    for (std::int64_t k = 0; k < config_.d_steps_per_g_step; ++k) {
      Tape<T> g_tape(false);
      Tensor<T> fake = generator_.forward(g_tape, constant(sample_latent<T>(batch, latent, z_rng)), Mode::train).detach();
      discriminator_.params().clear_grads();
      Tape<T> tape;
      auto d_real = discriminator_.forward(tape, real, Mode::train);
      auto d_fake = discriminator_.forward(tape, fake, Mode::train);
      auto loss = discriminator_loss(tape, d_real, d_fake);
      row.d_loss = check_finite(loss.item(), "discriminator loss", epoch);
      tape.backward(loss);
      adam_step(discriminator_.params(), d_adam_, hyper_);
    }

    generator_.params().clear_grads();
    discriminator_.params().clear_grads();
    Tape<T> tape;
    auto fake = generator_.forward(tape, constant(sample_latent<T>(batch, latent, z_rng)), Mode::train);
    auto d_fake = discriminator_.forward(tape, fake, Mode::train);
    auto g = generator_loss_tv(tape, d_fake, fake, static_cast<T>(config_.lambda_tv), config_.objective());
    check_finite(g.adversarial.item(), "generator adversarial loss", epoch);
    row.tv_term = check_finite(g.tv.total.item(), "total variation term", epoch);
    row.g_loss = check_finite(g.total.item(), "generator total loss", epoch);
    tape.backward(g.total);
    adam_step(generator_.params(), g_adam_, hyper_);
    discriminator_.params().clear_grads();

    ++iteration_;
    row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    return row;
  }

  /// Writes the 4x4 grid of the fixed latents to `name` in the output directory.
  std::filesystem::path emit_sample_grid(const std::string& name) {
    const auto path = out_ / name;
    write_image(path, tile_images(generate_images(generator_, fixed_z_), 4));
    return path;
  }

  std::filesystem::path emit_sample_grid(std::int64_t epoch) {
    return emit_sample_grid("samples_epoch_" + epoch_stamp(epoch) + ".png");
  }

  void save_checkpoint(const std::filesystem::path& path) const {
    tvgan::save_checkpoint(path, spec_, generator_, discriminator_);
  }

  /// Full-precision parameters, buffers, optimizer moments and counters.
  void save_state(const std::filesystem::path& path) const {
    Archive a;
    a.fingerprint = spec_.fingerprint();
    append_network(a, generator_.params());
    append_network(a, discriminator_.params());
    append_adam(a, generator_.params(), g_adam_, "adam.generator.");
    append_adam(a, discriminator_.params(), d_adam_, "adam.discriminator.");
    a.add("trainer.epochs_done", Array<double>(Shape{1}, std::vector<double>{static_cast<double>(epochs_done_)}));
    a.add("trainer.iteration", Array<double>(Shape{1}, std::vector<double>{static_cast<double>(iteration_)}));
    write_archive(path, kStateMagic, a, StorageType::f64);
  }

  void load_state(const std::filesystem::path& path) {
    auto a = read_archive(path, kStateMagic, StorageType::f64);
    if (a.fingerprint != spec_.fingerprint()) throw FingerprintMismatch(a.fingerprint, spec_.fingerprint());
    restore_network(a, generator_.params());
    restore_network(a, discriminator_.params());
    restore_adam(a, generator_.params(), g_adam_, "adam.generator.");
    restore_adam(a, discriminator_.params(), d_adam_, "adam.discriminator.");
    epochs_done_ = static_cast<std::int64_t>(a.at("trainer.epochs_done")[0]);
    iteration_ = static_cast<std::int64_t>(a.at("trainer.iteration")[0]);
  }

  /// Trains from the current epoch to config.epochs, writing every artifact.
  TrainSummary run(const EpochCallback& after_epoch = {}) {
    TrainSummary summary;
    summary.log_path = log_path();
    const bool fresh = epochs_done_ == 0;
    std::error_code ec;
    const bool empty_log = !std::filesystem::exists(summary.log_path) || std::filesystem::file_size(summary.log_path, ec) == 0;
    std::ofstream log(summary.log_path, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw DataError("cannot write " + summary.log_path.string());
    if (fresh || empty_log) log << kLogHeader << '\n';

    const std::int64_t cadence = config_.sample_grid_every_n_epochs;
    if (fresh) summary.grids.push_back(emit_sample_grid(std::int64_t{0}));
    for (std::int64_t epoch = epochs_done_ + 1; epoch <= config_.epochs; ++epoch) {
      for (const auto& row : train_epoch(epoch)) {
        log << format_log_row(row) << '\n';
        ++summary.rows;
      }
      log.flush();
      if (!log) throw DataError("write failed for " + summary.log_path.string());
      ++summary.epochs_run;
      if (epoch == 1 && cadence != 1) summary.grids.push_back(emit_sample_grid("samples_first_epoch.png"));
      if (epoch % cadence == 0) {
        summary.grids.push_back(emit_sample_grid(epoch));
        const auto ckpt = out_ / ("checkpoint_epoch_" + epoch_stamp(epoch) + ".ckpt");
        save_checkpoint(ckpt);
        save_state(out_ / ("state_epoch_" + epoch_stamp(epoch) + ".state"));
        summary.checkpoints.push_back(ckpt);
      }
      if (after_epoch && !after_epoch(epoch)) break;
    }
    summary.final_checkpoint = out_ / "checkpoint_final.ckpt";
    save_checkpoint(summary.final_checkpoint);
    save_state(out_ / "state_final.state");
    summary.checkpoints.push_back(summary.final_checkpoint);
    return summary;
  }

 private:
  double check_finite(T value, const char* term, std::int64_t epoch) const {
    const double v = static_cast<double>(value);
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite ") + term + " (" + std::to_string(v) + ") at epoch " +
                         std::to_string(epoch) + ", iteration " + std::to_string(iteration_));
    }
    return v;
  }

  static void append_adam(Archive& a, const NetworkParams<T>& params, const AdamState<T>& s,
                          const std::string& prefix) {
    const auto& ps = params.params();
    for (std::size_t k = 0; k < ps.size(); ++k) {
      a.add(prefix + ps[k].name + ".m", s.first_moment[k]);
      a.add(prefix + ps[k].name + ".v", s.second_moment[k]);
    }
    a.add(prefix + "step", Array<double>(Shape{1}, std::vector<double>{static_cast<double>(s.step)}));
  }

  static void restore_adam(const Archive& a, const NetworkParams<T>& params, AdamState<T>& s,
                           const std::string& prefix) {
    const auto& ps = params.params();
    auto copy = [&](const std::string& name, Array<T>& dst) {
      const auto& src = a.at(name);
      if (src.shape() != dst.shape()) throw DataError("optimizer tensor '" + name + "' has the wrong shape");
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src[i]);
    };
    for (std::size_t k = 0; k < ps.size(); ++k) {
      copy(prefix + ps[k].name + ".m", s.first_moment[k]);
      copy(prefix + ps[k].name + ".v", s.second_moment[k]);
    }
    s.step = static_cast<std::int64_t>(a.at(prefix + "step")[0]);
  }

  TrainConfig config_;
  GanSpec spec_;
  Generator<T> generator_;
  Discriminator<T> discriminator_;
  AdamState<T> g_adam_, d_adam_;
  AdamHyper hyper_;
  std::filesystem::path out_;
  Dataset data_;
  Array<T> fixed_z_;
  std::int64_t epochs_done_ = 0;
  std::int64_t iteration_ = 0;
};

/// Runs a full training in the configured precision.
inline TrainSummary run_training(const TrainConfig& config, const EpochCallback& after_epoch = {}) {
  config.validate();
  if (config.precision == 64) return Trainer<double>(config).run(after_epoch);
  return Trainer<float>(config).run(after_epoch);
}

}  // namespace tvgan
