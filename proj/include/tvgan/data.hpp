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

// Dataset ingestion: crop/resize recipes for the two fingerprint sensor
// layouts, augmentation, manifests, a synthetic ridge-pattern corpus, and a
// seeded minibatch stream.
//
// Conventions:
//  * Images are W x H; a crop window is given as rows [top, top+side) and
//    columns [left, left+side) with top = (H - side) / 2 and left =
//    (W - side) / 2, rounded down (ties go toward the top-left).
//  * Resize is bilinear with corner-aligned sampling: output pixel i reads
//    source coordinate i * (in - 1) / (out - 1).
//  * Intensities map [0, 255] -> [-1, 1] via v / 127.5 - 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tvgan/image_io.hpp"
#include "tvgan/tensor.hpp"

namespace tvgan {

/// Single-channel image with values in [-1, 1], row-major.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {}

  double& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * width + c]; }

  bool operator==(const Image&) const = default;
};

// ---------------------------------------------------------------------------
// Preprocessing

enum class Recipe { fvc2006, polyu, none };

inline std::string recipe_name(Recipe r) {
  switch (r) {
    case Recipe::fvc2006: return "fvc2006";
    case Recipe::polyu: return "polyu";
    case Recipe::none: return "none";
  }
  return "none";
}

inline Recipe parse_recipe(const std::string& s) {
  if (s == "fvc2006") return Recipe::fvc2006;
  if (s == "polyu") return Recipe::polyu;
  if (s == "none") return Recipe::none;
  throw ConfigError("unknown preprocessing recipe '" + s + "' (expected fvc2006, polyu or none)");
}

/// Side of the central square crop for a recipe; 0 means no crop.
inline std::size_t crop_side(Recipe r) {
  switch (r) {
    case Recipe::fvc2006: return 400;
    case Recipe::polyu: return 480;
    case Recipe::none: return 0;
  }
  return 0;
}

struct CropWindow {
  std::size_t top;
  std::size_t left;
  std::size_t side;
};

inline CropWindow center_crop_window(std::size_t width, std::size_t height, std::size_t side,
                                     const std::string& recipe = "center crop") {
  if (width < side || height < side) {
    throw DimensionError(recipe + " recipe expects an image of at least " + std::to_string(side) +
                         "x" + std::to_string(side) + ", got " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  return {(height - side) / 2, (width - side) / 2, side};
}

inline double to_unit_range(std::uint8_t v) { return static_cast<double>(v) / 127.5 - 1.0; }

/// Crops the window and maps intensities to [-1, 1] (no resize).
inline Image crop_to_unit(const GrayImage& img, const CropWindow& win) {
  Image out(win.side, win.side);
  for (std::size_t r = 0; r < win.side; ++r) {
    for (std::size_t c = 0; c < win.side; ++c) out.at(r, c) = to_unit_range(img.at(win.top + r, win.left + c));
  }
  return out;
}

inline Image to_unit(const GrayImage& img) {
  Image out(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.values[i] = to_unit_range(img.pixels[i]);
  return out;
}

inline Image resize_bilinear(const Image& in, std::size_t out_h, std::size_t out_w) {
  if (in.height == out_h && in.width == out_w) return in;
  Image out(out_h, out_w);
  auto coord = [](std::size_t i, std::size_t n_in, std::size_t n_out) {
    return n_out > 1 ? static_cast<double>(i) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1)
                     : 0.0;
  };
  for (std::size_t r = 0; r < out_h; ++r) {
    const double y = coord(r, in.height, out_h);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t y1 = std::min(y0 + 1, in.height - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      const double x = coord(c, in.width, out_w);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const std::size_t x1 = std::min(x0 + 1, in.width - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = in.at(y0, x0) * (1 - fx) + in.at(y0, x1) * fx;
      const double bot = in.at(y1, x0) * (1 - fx) + in.at(y1, x1) * fx;
      out.at(r, c) = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

/// Crop per recipe, resize to output_size x output_size, map to [-1, 1].
inline Image preprocess(const GrayImage& img, Recipe recipe, std::size_t output_size = 64) {
  const std::size_t side = crop_side(recipe);
  Image cropped = side ? crop_to_unit(img, center_crop_window(img.width, img.height, side, recipe_name(recipe)))
                       : to_unit(img);
  return resize_bilinear(cropped, output_size, output_size);
}

inline Image preprocess_fvc(const GrayImage& img) { return preprocess(img, Recipe::fvc2006, 64); }
inline Image preprocess_polyu(const GrayImage& img) { return preprocess(img, Recipe::polyu, 64); }

/// [-1, 1] -> [0, 255] with round-half-away-from-zero; 0 maps to 128.
inline std::uint8_t to_pixel(double v) {
  const double p = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5);
  return static_cast<std::uint8_t>(p);
}

inline GrayImage to_gray(const Image& img) {
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.values.size(); ++i) out.pixels[i] = to_pixel(img.values[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentFlags {
  bool hflip = false;
  bool shift = false;
  bool brightness = false;

  bool any() const { return hflip || shift || brightness; }
  bool operator==(const AugmentFlags&) const = default;
};

inline std::string to_string(const AugmentFlags& f) {
  std::string s;
  auto add = [&s](const char* n) { s += (s.empty() ? "" : ",") + std::string(n); };
  if (f.hflip) add("hflip");
  if (f.shift) add("shift");
  if (f.brightness) add("brightness");
  return s.empty() ? "none" : s;
}

inline AugmentFlags parse_augment_flags(const std::string& text) {
  AugmentFlags f;
  if (text.empty() || text == "none") return f;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "hflip") f.hflip = true;
    else if (item == "shift") f.shift = true;
    else if (item == "brightness") f.brightness = true;
    else throw ConfigError("unknown augmentation '" + item + "' (expected hflip, shift, brightness)");
  }
  return f;
}

inline constexpr int kMaxShift = 2;
inline constexpr double kMaxBrightness = 0.05;

/// Concrete transforms chosen for one image.
struct AugmentPlan {
  bool flip = false;
  int shift_rows = 0;
  int shift_cols = 0;
  double brightness = 0.0;
};

/// Each enabled transform is applied independently with probability 0.5.
/// Shifts are uniform integers in [-2, 2]; brightness offsets uniform in
/// [-0.05, 0.05].
inline AugmentPlan sample_augment_plan(const AugmentFlags& flags, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  AugmentPlan plan;
  if (flags.hflip && coin(rng) < 0.5) plan.flip = true;
  if (flags.shift && coin(rng) < 0.5) {
    std::uniform_int_distribution<int> d(-kMaxShift, kMaxShift);
    plan.shift_rows = d(rng);
    plan.shift_cols = d(rng);
  }
  if (flags.brightness && coin(rng) < 0.5) {
    plan.brightness = std::uniform_real_distribution<double>(-kMaxBrightness, kMaxBrightness)(rng);
  }
  return plan;
}

/// Applies flip, then shift with edge replication, then brightness, then
/// clamps to [-1, 1].
inline Image apply_augment(const Image& in, const AugmentPlan& plan) {
  Image out(in.height, in.width);
  const auto H = static_cast<long>(in.height), W = static_cast<long>(in.width);
  for (long r = 0; r < H; ++r) {
    for (long c = 0; c < W; ++c) {
      long sr = std::clamp(r - plan.shift_rows, 0L, H - 1);
      long sc = std::clamp(c - plan.shift_cols, 0L, W - 1);
      if (plan.flip) sc = W - 1 - sc;
      const double v = in.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc)) + plan.brightness;
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = std::clamp(v, -1.0, 1.0);
    }
  }
  return out;
}

inline Image augment(const Image& in, const AugmentFlags& flags, std::mt19937_64& rng) {
  if (!flags.any()) return in;
  return apply_augment(in, sample_augment_plan(flags, rng));
}

// ---------------------------------------------------------------------------
// Manifest
//
//   # tvgan manifest v1
//   recipe=<fvc2006|polyu|none>
//   shuffle_seed=<u64>
//   augment=<none|hflip,shift,brightness>
//   <relative_path>\t<width>\t<height>
//   ...
// Paths are relative to the directory containing the manifest.

inline constexpr const char* kManifestHeader = "# tvgan manifest v1";

struct ManifestEntry {
  std::string path;
  std::size_t width = 0;
  std::size_t height = 0;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  Recipe recipe = Recipe::none;
  std::uint64_t shuffle_seed = 0;
  AugmentFlags augment;
  std::vector<ManifestEntry> entries;
};

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError(path.string() + ": cannot open for writing");
  os << kManifestHeader << '\n'
     << "recipe=" << recipe_name(m.recipe) << '\n'
     << "shuffle_seed=" << m.shuffle_seed << '\n'
     << "augment=" << to_string(m.augment) << '\n';
  for (const auto& e : m.entries) os << e.path << '\t' << e.width << '\t' << e.height << '\n';
  if (!os) throw DataError(path.string() + ": write failed");
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError(path.string() + ": cannot open manifest");
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& why) {
    return DataError(path.string() + ":" + std::to_string(lineno) + ": " + why);
  };
  if (!std::getline(is, line) || line != kManifestHeader) {
    ++lineno;
    throw bad("missing manifest header");
  }
  ++lineno;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.find('\t') == std::string::npos) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw bad("expected key=value or a tab-separated entry");
      const auto key = line.substr(0, eq), value = line.substr(eq + 1);
      try {
        if (key == "recipe") m.recipe = parse_recipe(value);
        else if (key == "shuffle_seed") m.shuffle_seed = std::stoull(value);
        else if (key == "augment") m.augment = parse_augment_flags(value);
        else throw bad("unknown header key '" + key + "'");
      } catch (const std::logic_error& e) {
        throw bad(e.what());
      }
      continue;
    }
    std::stringstream ss(line);
    ManifestEntry e;
    std::string w, h;
    if (!std::getline(ss, e.path, '\t') || !std::getline(ss, w, '\t') || !std::getline(ss, h, '\t')) {
      throw bad("expected path<TAB>width<TAB>height");
    }
    try {
      e.width = std::stoul(w);
      e.height = std::stoul(h);
    } catch (const std::logic_error&) {
      throw bad("bad image size");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

/// Scans `image_dir` (sorted, non-recursive) for PNG/PGM files, decodes each
/// to record its size, and returns a manifest rooted at `manifest_dir`.
inline DatasetManifest build_manifest(const std::filesystem::path& image_dir,
                                      const std::filesystem::path& manifest_dir, Recipe recipe,
                                      std::uint64_t shuffle_seed, AugmentFlags augment) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(image_dir)) throw DataError(image_dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(image_dir)) {
    if (de.is_regular_file() && is_image_file(de.path())) files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  DatasetManifest m;
  m.root = manifest_dir;
  m.recipe = recipe;
  m.shuffle_seed = shuffle_seed;
  m.augment = augment;
  const std::size_t side = crop_side(recipe);
  for (const auto& f : files) {
    const auto img = read_image(f);
    if (side) center_crop_window(img.width, img.height, side, recipe_name(recipe) + " (" + f.string() + ")");
    m.entries.push_back({fs::proximate(f, manifest_dir).generic_string(), img.width, img.height});
  }
  return m;
}

// ---------------------------------------------------------------------------
// Synthetic ridge corpus

struct RidgeSynthConfig {
  std::size_t n_images = 2000;
  std::size_t size = 64;
  double freq_min = 3.0;  // ridge cycles per image width
  double freq_max = 6.0;
  double orientation_variation = 0.6;  // radians; 0 gives straight parallel ridges
  double noise_level = 0.1;
  double contrast = 2.0;  // tanh gain
  std::uint64_t seed = 0;
};

/// Parameters drawn for one synthetic image.
struct RidgeParams {
  double theta = 0.0;
  double frequency = 4.0;
  double phase = 0.0;
  // Low-frequency orientation perturbation: sum_k amp_k sin(2 pi (u_k x + v_k y) / size + psi_k).
  std::vector<double> amp, u, v, psi;
};

inline RidgeParams draw_ridge_params(const RidgeSynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RidgeParams p;
  p.theta = std::numbers::pi * unit(rng);
  p.frequency = cfg.freq_min + (cfg.freq_max - cfg.freq_min) * unit(rng);
  p.phase = 2.0 * std::numbers::pi * unit(rng);
  for (int k = 0; k < 3; ++k) {
    p.amp.push_back(cfg.orientation_variation * (2.0 * unit(rng) - 1.0) / 3.0);
    p.u.push_back(2.0 * unit(rng) - 1.0);
    p.v.push_back(2.0 * unit(rng) - 1.0);
    p.psi.push_back(2.0 * std::numbers::pi * unit(rng));
  }
  return p;
}

/// tanh(contrast * (sin(2 pi f (x cos t + y sin t) / size + phase) + noise)),
/// with t the local orientation theta + perturbation(x, y).
inline Image render_ridges(const RidgeSynthConfig& cfg, const RidgeParams& p, std::mt19937_64& noise_rng) {
  const std::size_t n = cfg.size;
  const double s = static_cast<double>(n);
  std::normal_distribution<double> noise(0.0, 1.0);
  Image img(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      double t = p.theta;
      for (std::size_t k = 0; k < p.amp.size(); ++k) {
        t += p.amp[k] * std::sin(2.0 * std::numbers::pi * (p.u[k] * x + p.v[k] * y) / s + p.psi[k]);
      }
      double v = std::sin(2.0 * std::numbers::pi * p.frequency * (x * std::cos(t) + y * std::sin(t)) / s + p.phase);
      if (cfg.noise_level > 0) v += cfg.noise_level * noise(noise_rng);
      img.at(r, c) = std::tanh(cfg.contrast * v);
    }
  }
  return img;
}

/// Image i of the corpus; depends only on (seed, i).
inline Image synth_ridge_image(const RidgeSynthConfig& cfg, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const auto params = draw_ridge_params(cfg, rng);
  return render_ridges(cfg, params, rng);
}

/// Writes ridge_NNNNN.png files and manifest.txt (recipe none) into `dir`.
inline DatasetManifest synth_ridges(const RidgeSynthConfig& cfg, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (cfg.size < 2) throw ConfigError("synthetic image size must be at least 2");
  if (cfg.freq_min <= 0 || cfg.freq_max < cfg.freq_min) throw ConfigError("bad ridge frequency range");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError(dir.string() + ": cannot create directory");
  DatasetManifest m;
  m.root = dir;
  m.recipe = Recipe::none;
  m.shuffle_seed = cfg.seed;
  for (std::size_t i = 0; i < cfg.n_images; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "ridge_%05zu.png", i);
    write_png(dir / name, to_gray(synth_ridge_image(cfg, i)));
    m.entries.push_back({name, cfg.size, cfg.size});
  }
  write_manifest(dir / "manifest.txt", m);
  return m;
}

// ---------------------------------------------------------------------------
// Loading

/// Preprocessed images of a manifest held in memory.
class Dataset {
 public:
  Dataset() = default;

  /// Decodes and preprocesses every entry; errors name the offending file.
  Dataset(DatasetManifest manifest, std::size_t image_size) : manifest_(std::move(manifest)), size_(image_size) {
    for (const auto& e : manifest_.entries) {
      const auto path = manifest_.root / e.path;
      GrayImage img;
      try {
        img = read_image(path);
      } catch (const DataError& err) {
        throw DataError(std::string("failed to decode dataset image: ") + err.what());
      }
      if (img.width != e.width || img.height != e.height) {
        throw DataError(path.string() + ": manifest says " + std::to_string(e.width) + "x" +
                        std::to_string(e.height) + ", file is " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
      }
      try {
        images_.push_back(preprocess(img, manifest_.recipe, image_size));
      } catch (const DimensionError& err) {
        throw DataError(path.string() + ": " + err.what());
      }
    }
  }

  static Dataset load(const std::filesystem::path& manifest_path, std::size_t image_size) {
    return Dataset(read_manifest(manifest_path), image_size);
  }

  std::size_t size() const { return images_.size(); }
  std::size_t image_size() const { return size_; }
  const Image& image(std::size_t i) const { return images_.at(i); }
  const DatasetManifest& manifest() const { return manifest_; }

  /// Seeded permutation of all indices for one epoch.
  std::vector<std::size_t> epoch_order(std::uint64_t epoch) const {
    std::vector<std::size_t> order(images_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::seed_seq seq{static_cast<std::uint32_t>(manifest_.shuffle_seed),
                      static_cast<std::uint32_t>(manifest_.shuffle_seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

 private:
  DatasetManifest manifest_;
  std::size_t size_ = 0;
  std::vector<Image> images_;
};

/// Stacks images into a (B, 1, S, S) array.
template <typename T>
Array<T> stack_images(const std::vector<const Image*>& images) {
  if (images.empty()) throw DimensionError("cannot stack an empty image list");
  const std::size_t h = images.front()->height, w = images.front()->width;
  Array<T> out(Shape{images.size(), 1, h, w});
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b]->height != h || images[b]->width != w) throw DimensionError("stack_images: size mismatch");
    std::copy(images[b]->values.begin(), images[b]->values.end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * h * w));
  }
  return out;
}

/// Full minibatches of one epoch in seeded order; the remainder is dropped.
/// Augmentation draws come from a generator seeded by (shuffle seed, epoch).
template <typename T>
class BatchStream {
 public:
  BatchStream(const Dataset& data, std::size_t batch_size, std::uint64_t epoch)
      : data_(&data), batch_size_(batch_size), order_(data.epoch_order(epoch)) {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    const auto seed = data.manifest().shuffle_seed;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0xa46u};
    rng_.seed(seq);
  }

  std::size_t batches() const { return order_.size() / batch_size_; }
  std::size_t position() const { return next_; }

  /// Indices of batch k.
  std::vector<std::size_t> indices(std::size_t k) const {
    return {order_.begin() + static_cast<std::ptrdiff_t>(k * batch_size_),
            order_.begin() + static_cast<std::ptrdiff_t>((k + 1) * batch_size_)};
  }

  std::optional<Array<T>> next() {
    if (next_ >= batches()) return std::nullopt;
    std::vector<Image> augmented;
    std::vector<const Image*> ptrs;
    const auto& flags = data_->manifest().augment;
    for (auto i : indices(next_)) {
      if (flags.any()) {
        augmented.push_back(augment(data_->image(i), flags, rng_));
      } else {
        ptrs.push_back(&data_->image(i));
      }
    }
    if (flags.any()) {
      for (const auto& a : augmented) ptrs.push_back(&a);
    }
    ++next_;
    return stack_images<T>(ptrs);
  }

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  std::size_t next_ = 0;
};

template <typename T>
BatchStream<T> load_batches(const Dataset& data, std::size_t batch_size, std::uint64_t epoch) {
  return BatchStream<T>(data, batch_size, epoch);
}

}  // namespace tvgan
