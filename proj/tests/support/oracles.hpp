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

// Reference implementations used as test oracles. Everything here is written
// the slow, obvious way and shares no code with the library kernels.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tvgan/tensor.hpp"
#include "tvgan/ops.hpp"

namespace tvgan::oracle {

inline Array<double> random_array(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array<double> a(shape);
  for (auto& v : a.data()) v = u(rng);
  return a;
}

inline Array<double> normal_array(const Shape& shape, std::mt19937_64& rng, double mean = 0.0, double sd = 1.0) {
  std::normal_distribution<double> n(mean, sd);
  Array<double> a(shape);
  for (auto& v : a.data()) v = n(rng);
  return a;
}

/// Direct 7-loop cross-correlation with zero padding.
inline Array<double> conv2d(const Array<double>& x, const Array<double>& w, const Array<double>& b,
                            std::size_t stride, std::size_t pad) {
  const long B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const long Cout = w.dim(0), K = w.dim(2);
  const long OH = (H + 2 * long(pad) - K) / long(stride) + 1;
  const long OW = (W + 2 * long(pad) - K) / long(stride) + 1;
  Array<double> y(Shape{std::size_t(B), std::size_t(Cout), std::size_t(OH), std::size_t(OW)});
  for (long n = 0; n < B; ++n)
    for (long o = 0; o < Cout; ++o)
      for (long i = 0; i < OH; ++i)
        for (long j = 0; j < OW; ++j) {
          double acc = b[o];
          for (long c = 0; c < Cin; ++c)
            for (long u = 0; u < K; ++u)
              for (long v = 0; v < K; ++v) {
                const long r = i * long(stride) - long(pad) + u;
                const long s = j * long(stride) - long(pad) + v;
                if (r < 0 || r >= H || s < 0 || s >= W) continue;
                acc += x.at(n, c, r, s) * w.at(o, c, u, v);
              }
          y.at(n, o, i, j) = acc;
        }
  return y;
}

/// Scatter form of the transposed convolution: each input pixel stamps its
/// weighted kernel into the (cropped) output.
inline Array<double> conv_transpose2d(const Array<double>& x, const Array<double>& w, const Array<double>& b,
                                      std::size_t stride, std::size_t pad) {
  const long B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const long Cout = w.dim(1), K = w.dim(2);
  const long OH = (H - 1) * long(stride) - 2 * long(pad) + K;
  const long OW = (W - 1) * long(stride) - 2 * long(pad) + K;
  Array<double> y(Shape{std::size_t(B), std::size_t(Cout), std::size_t(OH), std::size_t(OW)});
  for (long n = 0; n < B; ++n)
    for (long o = 0; o < Cout; ++o)
      for (long i = 0; i < OH; ++i)
        for (long j = 0; j < OW; ++j) y.at(n, o, i, j) = b[o];
  for (long n = 0; n < B; ++n)
    for (long c = 0; c < Cin; ++c)
      for (long r = 0; r < H; ++r)
        for (long s = 0; s < W; ++s)
          for (long o = 0; o < Cout; ++o)
            for (long u = 0; u < K; ++u)
              for (long v = 0; v < K; ++v) {
                const long i = r * long(stride) - long(pad) + u;
                const long j = s * long(stride) - long(pad) + v;
                if (i < 0 || i >= OH || j < 0 || j >= OW) continue;
                y.at(n, o, i, j) += x.at(n, c, r, s) * w.at(c, o, u, v);
              }
  return y;
}

/// Anisotropic TV as a plain double loop over an H x W row-major image.
inline double tv(std::span<const double> img, std::size_t H, std::size_t W) {
  double total = 0.0;
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      if (i + 1 < H) total += std::abs(img[(i + 1) * W + j] - img[i * W + j]);
      if (j + 1 < W) total += std::abs(img[i * W + j + 1] - img[i * W + j]);
    }
  }
  return total;
}

/// Frechet distance between N(m1, v1) and N(m2, v2) in one dimension.
inline double frechet_1d(double m1, double v1, double m2, double v2) {
  return (m1 - m2) * (m1 - m2) + v1 + v2 - 2.0 * std::sqrt(v1 * v2);
}

inline double dot(const Array<double>& a, const Array<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// sum(y * r): contracts a tensor to a scalar with fixed random weights.
inline Tensor<double> project(Tape<double>& tape, const Tensor<double>& y, const Array<double>& r) {
  return sum(tape, mul(tape, y, constant(r)));
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<leaf>[<index>]"
  std::size_t checked = 0;
  std::size_t refined = 0;  // coordinates that needed a smaller step
};

/// |a - n| / max(|a|, |n|, floor).
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

using ScalarFn = std::function<Tensor<double>(Tape<double>&)>;

/// Compares reverse-mode gradients of `f` with central differences for each
/// named leaf. `max_coords` > 0 checks that many random coordinates per leaf.
/// A coordinate whose difference quotient disagrees at `step` is retried at
/// step/10 and step/100: a kink (relu, |x|) closer than `step` spoils the
/// quotient, while a wrong gradient disagrees at every step.
inline GradCheckResult check_gradients(const ScalarFn& f, std::vector<std::pair<std::string, Tensor<double>>> leaves,
                                       std::mt19937_64& rng, std::size_t max_coords = 0, double step = 1e-5,
                                       double tolerance = 1e-4) {
  for (auto& [name, t] : leaves) t.clear_grad();
  {
    Tape<double> tape;
    auto loss = f(tape);
    tape.backward(loss);
  }
  GradCheckResult result;
  for (auto& [name, t] : leaves) {
    const Array<double> analytic = t.has_grad() ? t.grad() : Array<double>(t.shape());
    std::vector<std::size_t> coords(t.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (max_coords && coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (auto i : coords) {
      auto& v = t.mutable_value();
      const double saved = v[i];
      auto quotient = [&](double h) {
        v[i] = saved + h;
        Tape<double> up(false);
        const double fp = f(up).item();
        v[i] = saved - h;
        Tape<double> down(false);
        const double fm = f(down).item();
        v[i] = saved;
        return (fp - fm) / (2.0 * h);
      };
      double err = rel_error(analytic[i], quotient(step));
      for (double h : {step / 10, step / 100}) {
        if (err < tolerance) break;
        if (h == step / 10) ++result.refined;
        err = std::min(err, rel_error(analytic[i], quotient(h)));
      }
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace tvgan::oracle
