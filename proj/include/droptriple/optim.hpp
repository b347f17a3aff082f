// Copyright 2026 The droptriple Authors.
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

#ifndef DROPTRIPLE_OPTIM_HPP_
#define DROPTRIPLE_OPTIM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "droptriple/encoder.hpp"

namespace droptriple {

// AdamW with decoupled weight decay:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta)
// with bias-corrected m_hat, v_hat.
struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  // One entry per parameter tensor, in EncoderParams::ForEachTensor order.
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  bool operator==(const OptimizerState&) const = default;
};

OptimizerState MakeOptimizerState(const EncoderParams& params,
                                  double beta1 = 0.9, double beta2 = 0.999,
                                  double epsilon = 1e-8);

// One update of a flat tensor. `step` is the 1-based step index used for
// bias correction. Throws ShapeMismatch when spans differ in length.
void AdamWUpdate(std::span<double> theta, std::span<const double> grad,
                 std::span<double> first_moment,
                 std::span<double> second_moment, std::uint64_t step,
                 double lr, double weight_decay, double beta1, double beta2,
                 double epsilon);

// Advances state.step, updates every tensor, and bumps params.version.
void AdamWStep(EncoderParams& params, const ParamGrads& grads,
               OptimizerState& state, double lr, double weight_decay);

}  // namespace droptriple

#endif  // DROPTRIPLE_OPTIM_HPP_
