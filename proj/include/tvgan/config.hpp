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

// Training configuration and its flat key=value text form.
//
//   # comment
//   epochs=120
//   lambda_tv=0.0001
//
// Keys are the TrainConfig field names; unknown keys are errors.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tvgan/errors.hpp"
#include "tvgan/losses.hpp"
#include "tvgan/networks.hpp"

namespace tvgan {

struct TrainConfig {
  std::int64_t epochs = 120;
  std::int64_t batch_size = 40;
  double learning_rate = 0.0002;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t latent_dim = 100;
  double lambda_tv = 1e-4;
  std::uint64_t seed = 0;
  std::int64_t d_steps_per_g_step = 1;
  std::int64_t sample_grid_every_n_epochs = 10;
  std::string dataset_path;
  std::string output_dir;

  // Architecture and execution.
  std::int64_t base_channels = 64;
  std::int64_t image_size = 64;
  std::int64_t precision = 32;  // 32 or 64 bit arithmetic
  std::int64_t threads = 1;
  std::string generator_objective = "nonsaturating";  // or "saturating"
  std::string resume_from;  // training-state file

  GeneratorObjective objective() const {
    return generator_objective == "saturating" ? GeneratorObjective::saturating
                                               : GeneratorObjective::nonsaturating;
  }

  GanSpec gan_spec() const {
    return GanSpec::dcgan(static_cast<std::size_t>(latent_dim), static_cast<std::size_t>(base_channels),
                          static_cast<std::size_t>(image_size));
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (epochs < 1) fail("epochs must be >= 1");
    if (batch_size < 2) fail("batch_size must be >= 2 (batch normalization needs two samples)");
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1)) fail("adam_beta1 must lie in [0, 1)");
    if (!(adam_beta2 >= 0 && adam_beta2 < 1)) fail("adam_beta2 must lie in [0, 1)");
    if (!(adam_eps > 0)) fail("adam_eps must be positive");
    if (latent_dim < 1) fail("latent_dim must be >= 1");
    if (!(lambda_tv >= 0) || !std::isfinite(lambda_tv)) fail("lambda_tv must be a finite value >= 0");
    if (d_steps_per_g_step < 1) fail("d_steps_per_g_step must be >= 1");
    if (sample_grid_every_n_epochs < 1) fail("sample_grid_every_n_epochs must be >= 1");
    if (base_channels < 1) fail("base_channels must be >= 1");
    if (precision != 32 && precision != 64) fail("precision must be 32 or 64");
    if (threads < 1) fail("threads must be >= 1");
    if (generator_objective != "nonsaturating" && generator_objective != "saturating") {
      fail("generator_objective must be nonsaturating or saturating");
    }
    if (dataset_path.empty()) fail("dataset_path is required (--dataset_path)");
    if (output_dir.empty()) fail("output_dir is required (--output_dir)");
    gan_spec();
  }
};

namespace detail {

struct ConfigField {
  const char* name;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename V>
V parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  V v{};
  is >> v;
  if (!is || !(is >> std::ws).eof()) throw ConfigError("bad value '" + text + "' for key " + key);
  return v;
}

template <typename V>
std::string format_number(V v) {
  std::ostringstream os;
  if constexpr (std::is_floating_point_v<V>) os.precision(17);
  os << v;
  return os.str();
}

#define TVGAN_NUMERIC_FIELD(field)                                                                  \
  ConfigField {                                                                                     \
    #field, [](const TrainConfig& c) { return format_number(c.field); },                            \
        [](TrainConfig& c, const std::string& v) { c.field = parse_number<decltype(c.field)>(#field, v); } \
  }
#define TVGAN_STRING_FIELD(field)                                                                   \
  ConfigField {                                                                                     \
    #field, [](const TrainConfig& c) { return c.field; }, [](TrainConfig& c, const std::string& v) { c.field = v; } \
  }

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      TVGAN_NUMERIC_FIELD(epochs),
      TVGAN_NUMERIC_FIELD(batch_size),
      TVGAN_NUMERIC_FIELD(learning_rate),
      TVGAN_NUMERIC_FIELD(adam_beta1),
      TVGAN_NUMERIC_FIELD(adam_beta2),
      TVGAN_NUMERIC_FIELD(adam_eps),
      TVGAN_NUMERIC_FIELD(latent_dim),
      TVGAN_NUMERIC_FIELD(lambda_tv),
      TVGAN_NUMERIC_FIELD(seed),
      TVGAN_NUMERIC_FIELD(d_steps_per_g_step),
      TVGAN_NUMERIC_FIELD(sample_grid_every_n_epochs),
      TVGAN_STRING_FIELD(dataset_path),
      TVGAN_STRING_FIELD(output_dir),
      TVGAN_NUMERIC_FIELD(base_channels),
      TVGAN_NUMERIC_FIELD(image_size),
      TVGAN_NUMERIC_FIELD(precision),
      TVGAN_NUMERIC_FIELD(threads),
      TVGAN_STRING_FIELD(generator_objective),
      TVGAN_STRING_FIELD(resume_from),
  };
  return fields;
}

#undef TVGAN_NUMERIC_FIELD
#undef TVGAN_STRING_FIELD

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : detail::config_fields()) keys.emplace_back(f.name);
  return keys;
}

inline std::string config_key_list() {
  std::string s;
  for (const auto& k : config_keys()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

inline bool is_config_key(const std::string& key) {
  for (const auto& f : detail::config_fields()) {
    if (key == f.name) return true;
  }
  return false;
}

inline void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : detail::config_fields()) {
    if (key == f.name) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'; valid keys: " + config_key_list());
}

inline std::string get_config_value(const TrainConfig& cfg, const std::string& key) {
  for (const auto& f : detail::config_fields()) {
    if (key == f.name) return f.get(cfg);
  }
  throw ConfigError("unknown config key '" + key + "'; valid keys: " + config_key_list());
}

/// Applies key=value lines from `text` on top of `cfg`.
inline void apply_config_text(TrainConfig& cfg, const std::string& text, const std::string& origin = "config") {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  apply_config_text(base, ss.str(), path.string());
  return base;
}

inline std::string config_to_text(const TrainConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : detail::config_fields()) os << f.name << '=' << f.get(cfg) << '\n';
  return os.str();
}

}  // namespace tvgan
