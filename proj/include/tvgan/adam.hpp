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

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tvgan/networks.hpp"

namespace tvgan {

struct AdamHyper {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers mirroring a NetworkParams, plus the step count.
template <typename T>
struct AdamState {
  std::vector<Array<T>> first_moment;
  std::vector<Array<T>> second_moment;
  std::int64_t step = 0;

  AdamState() = default;

  explicit AdamState(const NetworkParams<T>& params) {
    for (const auto& p : params.params()) {
      first_moment.emplace_back(p.tensor.shape());
      second_moment.emplace_back(p.tensor.shape());
    }
  }
};

/// One bias-corrected ADAM update of every parameter. Gradients are read,
/// not cleared.
template <typename T>
void adam_step(NetworkParams<T>& params, AdamState<T>& state, const AdamHyper& hyper) {
  auto& ps = params.params();
  if (state.first_moment.size() != ps.size()) {
    throw std::logic_error("adam_step: optimizer state does not match the parameter set");
  }
  for (const auto& p : ps) {
    if (!p.tensor.has_grad()) {
      throw std::logic_error("adam_step: parameter '" + p.name + "' has no gradient");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(hyper.beta1), b2 = static_cast<T>(hyper.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(hyper.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(hyper.beta2, t));
  const T lr = static_cast<T>(hyper.learning_rate), eps = static_cast<T>(hyper.eps);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto& value = ps[k].tensor.mutable_value();
    const auto& grad = ps[k].tensor.grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = grad[i];
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace tvgan
