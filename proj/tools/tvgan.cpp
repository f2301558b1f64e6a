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

// tvgan command line: prepare-data, synth, train, generate, tv, fid.
//
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric abort.
// TVGAN_OUTPUT_ROOT supplies the default output directory root.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tvgan/tvgan.hpp"

namespace fs = std::filesystem;
using namespace tvgan;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr const char* kOutputRootEnv = "TVGAN_OUTPUT_ROOT";

std::string default_output(const std::string& leaf) {
  const char* root = std::getenv(kOutputRootEnv);
  return root && *root ? (fs::path(root) / leaf).string() : std::string();
}

void require_output(std::string& dir, const std::string& leaf) {
  if (dir.empty()) dir = default_output(leaf);
  if (dir.empty()) throw ConfigError("--output_dir is required (or set " + std::string(kOutputRootEnv) + ")");
}

void write_effective(const fs::path& dir, const std::map<std::string, std::string>& values) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream os(dir / "effective_config.txt", std::ios::trunc);
  if (!os) throw DataError("cannot write " + (dir / "effective_config.txt").string());
  for (const auto& [k, v] : values) os << k << '=' << v << '\n';
}

/// Images from a manifest file or every PNG/PGM in a directory, in [-1, 1] at `size`.
std::vector<Image> load_image_set(const fs::path& path, std::size_t size) {
  if (fs::is_regular_file(path)) return [&] {
      const auto data = Dataset::load(path, size);
      std::vector<Image> out;
      for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data.image(i));
      return out;
    }();
  if (!fs::is_directory(path)) throw DataError(path.string() + ": no such file or directory");
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(path)) {
    if (de.is_regular_file() && is_image_file(de.path())) files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> out;
  for (const auto& f : files) {
    auto img = to_unit(read_image(f));
    if (img.height != size || img.width != size) img = resize_bilinear(img, size, size);
    out.push_back(std::move(img));
  }
  if (out.empty()) throw DataError(path.string() + ": no PNG or PGM images");
  return out;
}

struct ArchFlags {
  std::size_t latent_dim = 100;
  std::size_t base_channels = 64;
  std::size_t image_size = 64;
  std::string config;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--latent_dim", latent_dim, "Latent vector size of the model")->capture_default_str();
    cmd->add_option("--base_channels", base_channels, "Base channel width of the model")->capture_default_str();
    cmd->add_option("--image_size", image_size, "Image side length of the model")->capture_default_str();
    cmd->add_option("--config", config, "Training config file to take the architecture from (flags win)");
  }

  GanSpec resolve(const CLI::App* cmd) const {
    std::size_t l = latent_dim, b = base_channels, s = image_size;
    if (!config.empty()) {
      const auto cfg = load_config_file(config);
      if (!cmd->count("--latent_dim")) l = static_cast<std::size_t>(cfg.latent_dim);
      if (!cmd->count("--base_channels")) b = static_cast<std::size_t>(cfg.base_channels);
      if (!cmd->count("--image_size")) s = static_cast<std::size_t>(cfg.image_size);
    }
    return GanSpec::dcgan(l, b, s);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Total-variation regularized DC-GAN: data preparation, training, sampling and evaluation"};
  app.require_subcommand(1);

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data", "Write a dataset manifest for a directory of images");
  std::string prep_dir, prep_recipe = "fvc2006", prep_augment = "none", prep_output;
  std::uint64_t prep_seed = 0;
  prep->add_option("--image_dir", prep_dir, "Directory of PNG/PGM images")->required();
  prep->add_option("--recipe", prep_recipe, "Preprocessing recipe: fvc2006, polyu or none")->capture_default_str();
  prep->add_option("--seed", prep_seed, "Shuffle seed stored in the manifest")->capture_default_str();
  prep->add_option("--augment", prep_augment, "Comma list of flip, shift, brightness, or none")->capture_default_str();
  prep->add_option("--output", prep_output, "Manifest path (default <image_dir>/manifest.txt)");

  // synth
  auto* synth = app.add_subcommand("synth", "Write the synthetic ridge-pattern corpus");
  RidgeSynthConfig sc;
  std::string synth_out;
  synth->add_option("--output_dir", synth_out, "Destination directory");
  synth->add_option("--n_images", sc.n_images, "Number of images")->capture_default_str();
  synth->add_option("--size", sc.size, "Image side length")->capture_default_str();
  synth->add_option("--seed", sc.seed, "Random seed")->capture_default_str();
  synth->add_option("--freq_min", sc.freq_min, "Minimum ridge cycles per image width")->capture_default_str();
  synth->add_option("--freq_max", sc.freq_max, "Maximum ridge cycles per image width")->capture_default_str();
  synth->add_option("--orientation_variation", sc.orientation_variation, "Orientation field amplitude (radians)")
      ->capture_default_str();
  synth->add_option("--noise", sc.noise_level, "Additive noise level before the tanh")->capture_default_str();
  synth->add_option("--contrast", sc.contrast, "tanh gain")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a model");
  std::string train_config;
  train->add_option("--config", train_config, "key=value config file; flags override its values");
  const TrainConfig defaults;
  std::map<std::string, std::string> train_flags;
  for (const auto& key : config_keys()) {
    train_flags[key];
    train->add_option("--" + key, train_flags[key], "TrainConfig." + key)->default_str(get_config_value(defaults, key));
  }

  // generate
  auto* gen = app.add_subcommand("generate", "Sample images from a checkpoint");
  std::string gen_ckpt, gen_out;
  std::size_t gen_n = 8;
  std::uint64_t gen_seed = 0;
  ArchFlags gen_arch;
  gen->add_option("--checkpoint", gen_ckpt, "Checkpoint file")->required();
  gen->add_option("--n", gen_n, "Number of images")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Latent seed")->capture_default_str();
  gen->add_option("--output_dir", gen_out, "Destination directory");
  gen_arch.add_to(gen);

  // tv
  auto* tv = app.add_subcommand("tv", "Print the anisotropic total variation of an image (values in [-1, 1])");
  std::string tv_image;
  tv->add_option("image,--image", tv_image, "PNG or PGM image")->required();

  // fid
  auto* fid = app.add_subcommand("fid", "Frechet distance between two image sets");
  std::string fid_real, fid_gen, fid_extractor = "pixels";
  std::string fid_gen_ckpt;
  std::size_t fid_batch = 64, fid_n = 512;
  std::uint64_t fid_seed = 0;
  ArchFlags fid_arch;
  fid->add_option("--real", fid_real, "Directory of images or manifest file")->required();
  auto* fid_gen_opt = fid->add_option("--generated", fid_gen, "Directory of images or manifest file");
  fid->add_option("--generator_checkpoint", fid_gen_ckpt, "Checkpoint to sample the generated set from")
      ->excludes(fid_gen_opt);
  fid->add_option("--n", fid_n, "Samples drawn with --generator_checkpoint")->capture_default_str();
  fid->add_option("--seed", fid_seed, "Latent seed for --generator_checkpoint")->capture_default_str();
  fid->add_option("--extractor", fid_extractor, "pixels, dct, dct:<k> or checkpoint:<path>")->capture_default_str();
  fid->add_option("--batch_size", fid_batch, "Feature extraction batch size")->capture_default_str();
  fid_arch.add_to(fid);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*prep) {
      const fs::path dir = prep_dir;
      const fs::path manifest = prep_output.empty() ? dir / "manifest.txt" : fs::path(prep_output);
      const auto m = build_manifest(dir, manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path(),
                                    parse_recipe(prep_recipe), prep_seed, parse_augment_flags(prep_augment));
      write_manifest(manifest, m);
      std::cout << "manifest=" << manifest.string() << " images=" << m.entries.size() << '\n';
    } else if (*synth) {
      require_output(synth_out, "synth");
      const auto m = synth_ridges(sc, synth_out);
      write_effective(synth_out, {{"n_images", std::to_string(sc.n_images)},
                                  {"size", std::to_string(sc.size)},
                                  {"seed", std::to_string(sc.seed)},
                                  {"freq_min", std::to_string(sc.freq_min)},
                                  {"freq_max", std::to_string(sc.freq_max)},
                                  {"orientation_variation", std::to_string(sc.orientation_variation)},
                                  {"noise", std::to_string(sc.noise_level)},
                                  {"contrast", std::to_string(sc.contrast)}});
      std::cout << "manifest=" << (fs::path(synth_out) / "manifest.txt").string() << " images=" << m.entries.size()
                << '\n';
    } else if (*train) {
      TrainConfig cfg = train_config.empty() ? TrainConfig{} : load_config_file(train_config);
      for (const auto& [key, value] : train_flags) {
        if (train->count("--" + key)) set_config_value(cfg, key, value);
      }
      require_output(cfg.output_dir, "train");
      const auto summary = run_training(cfg, [&](std::int64_t epoch) {
        std::clog << "epoch " << epoch << "/" << cfg.epochs << " done\n";
        return true;
      });
      std::cout << "log=" << summary.log_path.string() << " rows=" << summary.rows
                << " checkpoint=" << summary.final_checkpoint.string() << " grids=" << summary.grids.size() << '\n';
    } else if (*gen) {
      require_output(gen_out, "generate");
      const auto spec = gen_arch.resolve(gen);
      Generator<double> g(spec.generator, 0);
      restore_network(read_checkpoint(gen_ckpt, spec), g.params());
      fs::create_directories(gen_out);
      const auto images = sample_images(g, gen_n, gen_seed);
      for (std::size_t i = 0; i < images.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%04zu.png", i);
        write_image(fs::path(gen_out) / name, to_gray(images[i]));
      }
      if (!images.empty()) write_image(fs::path(gen_out) / "grid.png", tile_images(images, std::min<std::size_t>(4, gen_n)));
      write_effective(gen_out, {{"checkpoint", gen_ckpt},
                                {"n", std::to_string(gen_n)},
                                {"seed", std::to_string(gen_seed)},
                                {"latent_dim", std::to_string(spec.generator.latent_dim)},
                                {"base_channels", std::to_string(spec.generator.base_channels)},
                                {"image_size", std::to_string(spec.generator.output_size)}});
      std::cout << "images=" << images.size() << " output_dir=" << gen_out << '\n';
    } else if (*tv) {
      const auto img = to_unit(read_image(tv_image));
      const double raw = anisotropic_tv<double>(std::span<const double>(img.values), img.height, img.width);
      std::printf("tv=%.17g raw=%.17g height=%zu width=%zu\n", raw / static_cast<double>(img.height * img.width), raw,
                  img.height, img.width);
    } else if (*fid) {
      if (fid_gen.empty() == fid_gen_ckpt.empty()) {
        throw ConfigError("fid needs exactly one of --generated or --generator_checkpoint");
      }
      std::optional<GanSpec> spec;
      if (fid_extractor.starts_with("checkpoint:") || !fid_gen_ckpt.empty()) spec = fid_arch.resolve(fid);
      const auto extractor = make_extractor(fid_extractor, spec);
      const std::size_t size = spec ? spec->generator.output_size : fid_arch.image_size;
      std::vector<Image> fakes;
      if (!fid_gen_ckpt.empty()) {
        Generator<double> g(spec->generator, 0);
        restore_network(read_checkpoint(fid_gen_ckpt, *spec), g.params());
        fakes = sample_images(g, fid_n, fid_seed);
      } else {
        fakes = load_image_set(fid_gen, size);
      }
      const auto report = fid_score(image_source(load_image_set(fid_real, size), fid_batch),
                                    image_source(std::move(fakes), fid_batch), *extractor);
      std::cout << report.line() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
