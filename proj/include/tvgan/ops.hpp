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

// Differentiable operations over Tensor. Every op checks its shape contract,
// computes the forward value eagerly, and records a backward rule on the tape.
// Layout is NCHW throughout; convolution is cross-correlation (no kernel flip).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tvgan/parallel.hpp"
#include "tvgan/tensor.hpp"

namespace tvgan {

enum class Mode { train, eval };

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

inline void require(bool ok, const std::string& op, const std::string& what) {
  if (!ok) throw DimensionError(op + ": " + what);
}

inline void require_rank(const Shape& s, std::size_t rank, const std::string& op,
                         const std::string& name) {
  require(s.size() == rank, op,
          name + " must have rank " + std::to_string(rank) + ", got " + to_string(s));
}

// Unfolds one image (C, img_h, img_w) into columns (C*K*K, col_h*col_w).
// Column (oh, ow) reads the K x K window anchored at (oh*stride - pad, ow*stride - pad).
template <typename T>
void im2col(const T* img, std::size_t channels, std::size_t img_h, std::size_t img_w,
            std::size_t kernel, std::size_t stride, std::size_t pad, std::size_t col_h,
            std::size_t col_w, T* col) {
  const auto H = static_cast<std::ptrdiff_t>(img_h);
  const auto W = static_cast<std::ptrdiff_t>(img_w);
  const auto P = static_cast<std::ptrdiff_t>(pad);
  const auto S = static_cast<std::ptrdiff_t>(stride);
  const std::size_t plane = col_h * col_w;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = img + c * img_h * img_w;
    for (std::size_t kh = 0; kh < kernel; ++kh) {
      for (std::size_t kw = 0; kw < kernel; ++kw) {
        T* dst = col + ((c * kernel + kh) * kernel + kw) * plane;
        for (std::size_t oh = 0; oh < col_h; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh) * S + static_cast<std::ptrdiff_t>(kh) - P;
          T* row = dst + oh * col_w;
          if (ih < 0 || ih >= H) {
            std::fill(row, row + col_w, T{0});
            continue;
          }
          const T* src_row = src + ih * W;
          for (std::size_t ow = 0; ow < col_w; ++ow) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow) * S + static_cast<std::ptrdiff_t>(kw) - P;
            row[ow] = (iw >= 0 && iw < W) ? src_row[iw] : T{0};
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters columns back onto the image, accumulating.
template <typename T>
void col2im(const T* col, std::size_t channels, std::size_t img_h, std::size_t img_w,
            std::size_t kernel, std::size_t stride, std::size_t pad, std::size_t col_h,
            std::size_t col_w, T* img) {
  const auto H = static_cast<std::ptrdiff_t>(img_h);
  const auto W = static_cast<std::ptrdiff_t>(img_w);
  const auto P = static_cast<std::ptrdiff_t>(pad);
  const auto S = static_cast<std::ptrdiff_t>(stride);
  const std::size_t plane = col_h * col_w;
  for (std::size_t c = 0; c < channels; ++c) {
    T* dst = img + c * img_h * img_w;
    for (std::size_t kh = 0; kh < kernel; ++kh) {
      for (std::size_t kw = 0; kw < kernel; ++kw) {
        const T* src = col + ((c * kernel + kh) * kernel + kw) * plane;
        for (std::size_t oh = 0; oh < col_h; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh) * S + static_cast<std::ptrdiff_t>(kh) - P;
          if (ih < 0 || ih >= H) continue;
          T* dst_row = dst + ih * W;
          const T* src_row = src + oh * col_w;
          for (std::size_t ow = 0; ow < col_w; ++ow) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow) * S + static_cast<std::ptrdiff_t>(kw) - P;
            if (iw >= 0 && iw < W) dst_row[iw] += src_row[ow];
          }
        }
      }
    }
  }
}

// Weight gradients are reduced over a fixed partition of the batch so the
// summation order does not depend on the thread count.
inline std::size_t grad_chunks(std::size_t batch) { return std::min<std::size_t>(batch, 8); }

inline std::pair<std::size_t, std::size_t> chunk_range(std::size_t chunk, std::size_t chunks,
                                                       std::size_t n) {
  return {chunk * n / chunks, (chunk + 1) * n / chunks};
}

template <typename T>
void accumulate_bias_grad(const Array<T>& gy, Array<T>& gb) {
  const std::size_t B = gy.dim(0), C = gy.dim(1), plane = gy.dim(2) * gy.dim(3);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* p = gy.data().data() + (b * C + c) * plane;
      T s{0};
      for (std::size_t i = 0; i < plane; ++i) s += p[i];
      gb[c] += s;
    }
  }
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> elementwise(Tape<T>& tape, const Tensor<T>& x, Fwd fwd, Bwd dydx) {
  Array<T> y(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(xv[i]);
  return tape.record(y, {x}, [x, y, dydx](const Array<T>& gy, GradSinks<T> gx) {
    if (!gx[0]) return;
    const auto& xv = x.value();
    auto& g = *gx[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * dydx(xv[i], y[i]);
  });
}

}  // namespace detail

/// Leaf tensor that never receives a gradient.
template <typename T>
Tensor<T> constant(Array<T> value) {
  return Tensor<T>(std::move(value), false);
}

/// 2-D cross-correlation. input (B, Cin, H, W), weight (Cout, Cin, K, K),
/// bias (Cout). Output spatial size is floor((H + 2p - K) / stride) + 1.
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride, std::size_t padding) {
  const std::string op = "conv2d";
  detail::require_rank(input.shape(), 4, op, "input");
  detail::require_rank(weight.shape(), 4, op, "weight");
  const std::size_t B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Cout = weight.dim(0), K = weight.dim(2);
  detail::require(weight.dim(1) == Cin, op,
                  "weight expects " + std::to_string(weight.dim(1)) + " input channels, input has " +
                      std::to_string(Cin));
  detail::require(weight.dim(3) == K, op, "kernel must be square, got " + to_string(weight.shape()));
  detail::require(bias.shape() == Shape{Cout}, op,
                  "bias must have shape (" + std::to_string(Cout) + "), got " + to_string(bias.shape()));
  detail::require(stride >= 1, op, "stride must be >= 1");
  detail::require(H + 2 * padding >= K && W + 2 * padding >= K, op,
                  "kernel " + std::to_string(K) + " exceeds padded input " + to_string(input.shape()));

  const std::size_t Ho = (H + 2 * padding - K) / stride + 1;
  const std::size_t Wo = (W + 2 * padding - K) / stride + 1;
  const std::size_t rows = Cin * K * K, cols = Ho * Wo;

  Array<T> out(Shape{B, Cout, Ho, Wo});
  {
    const T* x = input.value().data().data();
    const T* bv = bias.value().data().data();
    T* y = out.data().data();
    detail::ConstMatMap<T> wm(weight.value().data().data(), Cout, rows);
    parallel_for(B, [&](std::size_t b) {
      std::vector<T> col(rows * cols);
      detail::im2col(x + b * Cin * H * W, Cin, H, W, K, stride, padding, Ho, Wo, col.data());
      detail::MatMap<T> ym(y + b * Cout * cols, Cout, cols);
      ym.noalias() = wm * detail::ConstMatMap<T>(col.data(), rows, cols);
      for (std::size_t c = 0; c < Cout; ++c) ym.row(c).array() += bv[c];
    });
  }

  return tape.record(std::move(out), {input, weight, bias},
                     [=](const Array<T>& gy, GradSinks<T> g) {
    const T* x = input.value().data().data();
    detail::ConstMatMap<T> wm(weight.value().data().data(), Cout, rows);
    Array<T>* gx = g[0];
    Array<T>* gw = g[1];
    const std::size_t chunks = detail::grad_chunks(B);
    std::vector<Array<T>> partial(gw ? chunks : 0, Array<T>(Shape{Cout, rows}));
    parallel_for(chunks, [&](std::size_t chunk) {
      auto [lo, hi] = detail::chunk_range(chunk, chunks, B);
      std::vector<T> col(rows * cols);
      std::vector<T> dcol(gx ? rows * cols : 0);
      for (std::size_t b = lo; b < hi; ++b) {
        detail::ConstMatMap<T> gym(gy.data().data() + b * Cout * cols, Cout, cols);
        if (gw) {
          detail::im2col(x + b * Cin * H * W, Cin, H, W, K, stride, padding, Ho, Wo, col.data());
          detail::MatMap<T> pw(partial[chunk].data().data(), Cout, rows);
          pw.noalias() += gym * detail::ConstMatMap<T>(col.data(), rows, cols).transpose();
        }
        if (gx) {
          detail::MatMap<T> dm(dcol.data(), rows, cols);
          dm.noalias() = wm.transpose() * gym;
          detail::col2im(dcol.data(), Cin, H, W, K, stride, padding, Ho, Wo,
                         gx->data().data() + b * Cin * H * W);
        }
      }
    });
    if (gw) {
      for (const auto& p : partial) {
        for (std::size_t i = 0; i < gw->size(); ++i) (*gw)[i] += p[i];
      }
    }
    if (g[2]) detail::accumulate_bias_grad(gy, *g[2]);
  });
}

/// Fractionally-strided (transposed) convolution, the adjoint of conv2d.
/// input (B, Cin, H, W), weight (Cin, Cout, K, K), bias (Cout). Output
/// spatial size is (H - 1) * stride - 2p + K.
template <typename T>
Tensor<T> conv_transpose2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias, std::size_t stride, std::size_t padding) {
  const std::string op = "conv_transpose2d";
  detail::require_rank(input.shape(), 4, op, "input");
  detail::require_rank(weight.shape(), 4, op, "weight");
  const std::size_t B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Cout = weight.dim(1), K = weight.dim(2);
  detail::require(weight.dim(0) == Cin, op,
                  "weight expects " + std::to_string(weight.dim(0)) + " input channels, input has " +
                      std::to_string(Cin));
  detail::require(weight.dim(3) == K, op, "kernel must be square, got " + to_string(weight.shape()));
  detail::require(bias.shape() == Shape{Cout}, op,
                  "bias must have shape (" + std::to_string(Cout) + "), got " + to_string(bias.shape()));
  detail::require(stride >= 1, op, "stride must be >= 1");
  detail::require((H - 1) * stride + K > 2 * padding && (W - 1) * stride + K > 2 * padding, op,
                  "padding " + std::to_string(padding) + " leaves an empty output");

  const std::size_t Ho = (H - 1) * stride + K - 2 * padding;
  const std::size_t Wo = (W - 1) * stride + K - 2 * padding;
  const std::size_t rows = Cout * K * K, cols = H * W;

  Array<T> out(Shape{B, Cout, Ho, Wo});
  {
    const T* x = input.value().data().data();
    const T* bv = bias.value().data().data();
    T* y = out.data().data();
    detail::ConstMatMap<T> wm(weight.value().data().data(), Cin, rows);
    parallel_for(B, [&](std::size_t b) {
      std::vector<T> col(rows * cols);
      detail::MatMap<T> cm(col.data(), rows, cols);
      cm.noalias() = wm.transpose() * detail::ConstMatMap<T>(x + b * Cin * cols, Cin, cols);
      T* yb = y + b * Cout * Ho * Wo;
      detail::col2im(col.data(), Cout, Ho, Wo, K, stride, padding, H, W, yb);
      for (std::size_t c = 0; c < Cout; ++c) {
        T* plane = yb + c * Ho * Wo;
        for (std::size_t i = 0; i < Ho * Wo; ++i) plane[i] += bv[c];
      }
    });
  }

  return tape.record(std::move(out), {input, weight, bias},
                     [=](const Array<T>& gy, GradSinks<T> g) {
    const T* x = input.value().data().data();
    detail::ConstMatMap<T> wm(weight.value().data().data(), Cin, rows);
    Array<T>* gx = g[0];
    Array<T>* gw = g[1];
    const std::size_t chunks = detail::grad_chunks(B);
    std::vector<Array<T>> partial(gw ? chunks : 0, Array<T>(Shape{Cin, rows}));
    parallel_for(chunks, [&](std::size_t chunk) {
      auto [lo, hi] = detail::chunk_range(chunk, chunks, B);
      std::vector<T> dcol(rows * cols);
      for (std::size_t b = lo; b < hi; ++b) {
        detail::im2col(gy.data().data() + b * Cout * Ho * Wo, Cout, Ho, Wo, K, stride, padding,
                       H, W, dcol.data());
        detail::ConstMatMap<T> dm(dcol.data(), rows, cols);
        if (gx) {
          detail::MatMap<T> gxm(gx->data().data() + b * Cin * cols, Cin, cols);
          gxm.noalias() += wm * dm;
        }
        if (gw) {
          detail::MatMap<T> pw(partial[chunk].data().data(), Cin, rows);
          pw.noalias() += detail::ConstMatMap<T>(x + b * Cin * cols, Cin, cols) * dm.transpose();
        }
      }
    });
    if (gw) {
      for (const auto& p : partial) {
        for (std::size_t i = 0; i < gw->size(); ++i) (*gw)[i] += p[i];
      }
    }
    if (g[2]) detail::accumulate_bias_grad(gy, *g[2]);
  });
}

/// Per-channel running statistics owned by a batch-normalization layer.
template <typename T>
struct BatchNormStats {
  Array<T> running_mean;
  Array<T> running_var;

  explicit BatchNormStats(std::size_t channels = 1)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}
};

/// Batch normalization over (B, H, W) per channel. Train mode normalizes by
/// the biased batch variance and folds the unbiased variance into the
/// running estimate with weight `momentum`; eval mode uses running stats.
template <typename T>
Tensor<T> batchnorm2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& gamma,
                      const Tensor<T>& beta, BatchNormStats<T>& stats, Mode mode,
                      T eps = T(1e-5), T momentum = T(0.1)) {
  const std::string op = "batchnorm2d";
  detail::require_rank(input.shape(), 4, op, "input");
  const std::size_t B = input.dim(0), C = input.dim(1), plane = input.dim(2) * input.dim(3);
  const Shape cshape{C};
  detail::require(gamma.shape() == cshape && beta.shape() == cshape, op,
                  "gamma/beta must have shape (" + std::to_string(C) + ")");
  detail::require(stats.running_mean.shape() == cshape && stats.running_var.shape() == cshape, op,
                  "running statistics must have shape (" + std::to_string(C) + ")");
  const std::size_t count = B * plane;
  if (mode == Mode::train && count < 2) {
    throw DegenerateBatchError(op + ": train mode needs at least 2 values per channel, got " +
                               std::to_string(count));
  }

  const auto& x = input.value();
  Array<T> xhat(input.shape());
  Array<T> inv_std(cshape);
  for (std::size_t c = 0; c < C; ++c) {
    T mean, var;
    if (mode == Mode::train) {
      double s = 0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = x.data().data() + (b * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double m = s / static_cast<double>(count);
      double ss = 0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = x.data().data() + (b * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - m) * (p[i] - m);
      }
      mean = static_cast<T>(m);
      var = static_cast<T>(ss / static_cast<double>(count));
      const T unbiased = static_cast<T>(ss / static_cast<double>(count - 1));
      stats.running_mean[c] = (T{1} - momentum) * stats.running_mean[c] + momentum * mean;
      stats.running_var[c] = (T{1} - momentum) * stats.running_var[c] + momentum * unbiased;
    } else {
      mean = stats.running_mean[c];
      var = stats.running_var[c];
    }
    inv_std[c] = T{1} / std::sqrt(var + eps);
    for (std::size_t b = 0; b < B; ++b) {
      const T* p = x.data().data() + (b * C + c) * plane;
      T* q = xhat.data().data() + (b * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) q[i] = (p[i] - mean) * inv_std[c];
    }
  }

  Array<T> out(input.shape());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const T gm = gamma.value()[c], bt = beta.value()[c];
      const T* q = xhat.data().data() + (b * C + c) * plane;
      T* y = out.data().data() + (b * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) y[i] = gm * q[i] + bt;
    }
  }

  return tape.record(std::move(out), {input, gamma, beta},
                     [=](const Array<T>& gy, GradSinks<T> g) {
    for (std::size_t c = 0; c < C; ++c) {
      T sum_dy{0}, sum_dy_xhat{0};
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t off = (b * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += gy[off + i];
          sum_dy_xhat += gy[off + i] * xhat[off + i];
        }
      }
      if (g[1]) (*g[1])[c] += sum_dy_xhat;
      if (g[2]) (*g[2])[c] += sum_dy;
      if (!g[0]) continue;
      const T gm = gamma.value()[c];
      auto& gx = *g[0];
      if (mode == Mode::train) {
        const T n = static_cast<T>(count);
        const T k = gm * inv_std[c] / n;
        for (std::size_t b = 0; b < B; ++b) {
          const std::size_t off = (b * C + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            gx[off + i] += k * (n * gy[off + i] - sum_dy - xhat[off + i] * sum_dy_xhat);
          }
        }
      } else {
        const T k = gm * inv_std[c];
        for (std::size_t b = 0; b < B; ++b) {
          const std::size_t off = (b * C + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) gx[off + i] += k * gy[off + i];
        }
      }
    }
  });
}

/// x for x >= 0, slope * x otherwise. The derivative at exactly 0 is 1.
template <typename T>
Tensor<T> leaky_relu(Tape<T>& tape, const Tensor<T>& x, T slope) {
  if (!(slope >= T{0} && slope < T{1})) {
    throw ConfigError("leaky_relu: slope must lie in [0, 1), got " + std::to_string(slope));
  }
  return detail::elementwise(
      tape, x, [slope](T v) { return v >= T{0} ? v : slope * v; },
      [slope](T v, T) { return v >= T{0} ? T{1} : slope; });
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
  return leaky_relu(tape, x, T{0});
}

template <typename T>
Tensor<T> tanh(Tape<T>& tape, const Tensor<T>& x) {
  return detail::elementwise(
      tape, x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
  return detail::elementwise(
      tape, x,
      [](T v) {
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

/// y = x W^T + b with x (B, N), weight (M, N), bias (M).
template <typename T>
Tensor<T> linear(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias) {
  const std::string op = "linear";
  detail::require_rank(input.shape(), 2, op, "input");
  detail::require_rank(weight.shape(), 2, op, "weight");
  const std::size_t B = input.dim(0), N = input.dim(1), M = weight.dim(0);
  detail::require(weight.dim(1) == N, op,
                  "weight " + to_string(weight.shape()) + " incompatible with input " +
                      to_string(input.shape()));
  detail::require(bias.shape() == Shape{M}, op,
                  "bias must have shape (" + std::to_string(M) + "), got " + to_string(bias.shape()));

  Array<T> out(Shape{B, M});
  detail::ConstMatMap<T> xm(input.value().data().data(), B, N);
  detail::ConstMatMap<T> wm(weight.value().data().data(), M, N);
  detail::MatMap<T> ym(out.data().data(), B, M);
  ym.noalias() = xm * wm.transpose();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t m = 0; m < M; ++m) ym(b, m) += bias.value()[m];
  }
  return tape.record(std::move(out), {input, weight, bias},
                     [=](const Array<T>& gy, GradSinks<T> g) {
    detail::ConstMatMap<T> gym(gy.data().data(), B, M);
    detail::ConstMatMap<T> xm(input.value().data().data(), B, N);
    detail::ConstMatMap<T> wm(weight.value().data().data(), M, N);
    if (g[0]) {
      detail::MatMap<T> gx(g[0]->data().data(), B, N);
      gx.noalias() += gym * wm;
    }
    if (g[1]) {
      detail::MatMap<T> gw(g[1]->data().data(), M, N);
      gw.noalias() += gym.transpose() * xm;
    }
    if (g[2]) {
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t m = 0; m < M; ++m) (*g[2])[m] += gym(b, m);
      }
    }
  });
}

/// Mean binary cross-entropy, -mean(t log p + (1 - t) log(1 - p)), with p
/// clamped to [kProbClamp, 1 - kProbClamp]. Clamped entries pass no gradient.
template <typename T>
Tensor<T> bce_loss(Tape<T>& tape, const Tensor<T>& predicted, const Array<T>& target) {
  detail::require(predicted.shape() == target.shape(), "bce_loss",
                  "predicted " + to_string(predicted.shape()) + " vs target " +
                      to_string(target.shape()));
  const T lo = static_cast<T>(kProbClamp), hi = T{1} - static_cast<T>(kProbClamp);
  const auto& p = predicted.value();
  const std::size_t n = p.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::clamp(p[i], lo, hi);
    acc -= target[i] * std::log(pc) + (1.0 - target[i]) * std::log(1.0 - pc);
  }
  Array<T> out = Array<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));
  return tape.record(std::move(out), {predicted}, [=](const Array<T>& gy, GradSinks<T> g) {
    if (!g[0]) return;
    const auto& p = predicted.value();
    const T scale = gy[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] < lo || p[i] > hi) continue;
      (*g[0])[i] += scale * (-target[i] / p[i] + (T{1} - target[i]) / (T{1} - p[i]));
    }
  });
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
  T s{0};
  for (T v : x.value().data()) s += v;
  return tape.record(Array<T>::scalar(s), {x}, [](const Array<T>& gy, GradSinks<T> g) {
    if (!g[0]) return;
    for (auto& v : g[0]->data()) v += gy[0];
  });
}

template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x) {
  const T n = static_cast<T>(x.size());
  T s{0};
  for (T v : x.value().data()) s += v;
  return tape.record(Array<T>::scalar(s / n), {x}, [n](const Array<T>& gy, GradSinks<T> g) {
    if (!g[0]) return;
    for (auto& v : g[0]->data()) v += gy[0] / n;
  });
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.shape() == b.shape(), "add",
                  to_string(a.shape()) + " vs " + to_string(b.shape()));
  Array<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return tape.record(std::move(out), {a, b}, [](const Array<T>& gy, GradSinks<T> g) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!g[k]) continue;
      for (std::size_t i = 0; i < gy.size(); ++i) (*g[k])[i] += gy[i];
    }
  });
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.shape() == b.shape(), "mul",
                  to_string(a.shape()) + " vs " + to_string(b.shape()));
  Array<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return tape.record(std::move(out), {a, b}, [a, b](const Array<T>& gy, GradSinks<T> g) {
    if (g[0]) {
      for (std::size_t i = 0; i < gy.size(); ++i) (*g[0])[i] += gy[i] * b.value()[i];
    }
    if (g[1]) {
      for (std::size_t i = 0; i < gy.size(); ++i) (*g[1])[i] += gy[i] * a.value()[i];
    }
  });
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor) {
  Array<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x.value()[i];
  return tape.record(std::move(out), {x}, [factor](const Array<T>& gy, GradSinks<T> g) {
    if (!g[0]) return;
    for (std::size_t i = 0; i < gy.size(); ++i) (*g[0])[i] += factor * gy[i];
  });
}

template <typename T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& x, Shape shape) {
  return tape.record(x.value().reshaped(std::move(shape)), {x},
                     [](const Array<T>& gy, GradSinks<T> g) {
    if (!g[0]) return;
    for (std::size_t i = 0; i < gy.size(); ++i) (*g[0])[i] += gy[i];
  });
}

/// Collapses all trailing axes: (B, ...) -> (B, prod(...)).
template <typename T>
Tensor<T> flatten(Tape<T>& tape, const Tensor<T>& x) {
  const std::size_t B = x.dim(0);
  return reshape(tape, x, Shape{B, x.size() / B});
}

}  // namespace tvgan
