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
#include <string>

#include "tvgan/ops.hpp"
#include "tvgan/tv.hpp"

namespace tvgan {

enum class GeneratorObjective { nonsaturating, saturating };

/// -mean(log d_real) - mean(log(1 - d_fake)): the negated GAN value, minimized by D.
template <typename T>
Tensor<T> discriminator_loss(Tape<T>& tape, const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  const auto real_term = bce_loss(tape, d_real, Array<T>(d_real.shape(), T{1}));
  const auto fake_term = bce_loss(tape, d_fake, Array<T>(d_fake.shape(), T{0}));
  return add(tape, real_term, fake_term);
}

/// -mean(log d_fake).
template <typename T>
Tensor<T> generator_loss_nonsaturating(Tape<T>& tape, const Tensor<T>& d_fake) {
  return bce_loss(tape, d_fake, Array<T>(d_fake.shape(), T{1}));
}

/// mean(log(1 - d_fake)), the generator's side of the minimax value.
template <typename T>
Tensor<T> generator_loss_saturating(Tape<T>& tape, const Tensor<T>& d_fake) {
  return scale(tape, bce_loss(tape, d_fake, Array<T>(d_fake.shape(), T{0})), T{-1});
}

template <typename T>
struct GeneratorLoss {
  Tensor<T> total;
  Tensor<T> adversarial;
  TvValue<T> tv;
};

/// Adversarial generator loss plus lambda * tv_2d(generated).total.
template <typename T>
GeneratorLoss<T> generator_loss_tv(Tape<T>& tape, const Tensor<T>& d_fake,
                                   const Tensor<T>& generated, T lambda,
                                   GeneratorObjective objective = GeneratorObjective::nonsaturating) {
  if (!(lambda >= T{0}) || !std::isfinite(static_cast<double>(lambda))) {
    throw ConfigError("lambda_tv must be a finite nonnegative number, got " + std::to_string(lambda));
  }
  GeneratorLoss<T> out;
  out.adversarial = objective == GeneratorObjective::nonsaturating
                        ? generator_loss_nonsaturating(tape, d_fake)
                        : generator_loss_saturating(tape, d_fake);
  out.tv = tv_2d(tape, generated);
  if (lambda == T{0}) {
    out.total = out.adversarial;
  } else {
    out.total = add(tape, out.adversarial, scale(tape, out.tv.total, lambda));
  }
  return out;
}

}  // namespace tvgan
