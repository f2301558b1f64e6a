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

// Anisotropic total variation: the sum of absolute vertical and horizontal
// neighbour differences over valid index pairs (no wraparound, no padding).

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tvgan/ops.hpp"
#include "tvgan/tensor.hpp"

namespace tvgan {

/// sum_{n} |y[n+1] - y[n]|; zero for a single sample.
template <typename T>
T tv_1d(std::span<const T> signal) {
  T total{0};
  for (std::size_t n = 1; n < signal.size(); ++n) total += std::abs(signal[n] - signal[n - 1]);
  return total;
}

/// Unnormalized anisotropic TV of one row-major H x W image.
template <typename T>
T anisotropic_tv(std::span<const T> image, std::size_t height, std::size_t width) {
  if (image.size() != height * width) {
    throw DimensionError("anisotropic_tv: " + std::to_string(image.size()) +
                         " values for a " + std::to_string(height) + "x" +
                         std::to_string(width) + " image");
  }
  T total{0};
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const T y = image[i * width + j];
      if (i + 1 < height) total += std::abs(image[(i + 1) * width + j] - y);
      if (j + 1 < width) total += std::abs(image[i * width + j + 1] - y);
    }
  }
  return total;
}

/// Batch TV. `per_sample[i]` is the TV of image i divided by H * W; `total`
/// is the mean of per_sample and carries the subgradient (sign(0) = 0).
template <typename T>
struct TvValue {
  Tensor<T> total;
  std::vector<T> per_sample;
};

template <typename T>
TvValue<T> tv_2d(Tape<T>& tape, const Tensor<T>& images) {
  const auto& s = images.shape();
  if (s.size() != 4 || s[1] != 1) {
    throw DimensionError("tv_2d: images must have shape (B, 1, H, W), got " + to_string(s));
  }
  const std::size_t B = s[0], H = s[2], W = s[3], plane = H * W;
  const T norm = static_cast<T>(plane);

  TvValue<T> out;
  out.per_sample.resize(B);
  T total{0};
  for (std::size_t b = 0; b < B; ++b) {
    auto img = images.value().data().subspan(b * plane, plane);
    out.per_sample[b] = anisotropic_tv<T>(img, H, W) / norm;
    total += out.per_sample[b];
  }
  total /= static_cast<T>(B);

  const T weight = T{1} / (norm * static_cast<T>(B));
  out.total = tape.record(Array<T>::scalar(total), {images},
                          [=](const Array<T>& gy, GradSinks<T> g) {
    if (!g[0]) return;
    const auto& y = images.value();
    auto& gx = *g[0];
    const T k = gy[0] * weight;
    auto sign = [](T v) { return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0}); };
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t off = b * plane;
      for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
          const std::size_t p = off + i * W + j;
          if (i + 1 < H) {
            const T sg = k * sign(y[p + W] - y[p]);
            gx[p + W] += sg;
            gx[p] -= sg;
          }
          if (j + 1 < W) {
            const T sg = k * sign(y[p + 1] - y[p]);
            gx[p + 1] += sg;
            gx[p] -= sg;
          }
        }
      }
    }
  });
  return out;
}

}  // namespace tvgan
