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

#ifndef DROPTRIPLE_GRADCHECK_HPP_
#define DROPTRIPLE_GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "droptriple/encoder.hpp"
#include "droptriple/loss.hpp"

namespace droptriple {

// A random batch pushed through both encoders and one loss; analytic
// parameter gradients are compared with central differences.
struct GradCheckOptions {
  std::uint64_t seed = 1;
  std::size_t batch_size = 4;
  EncoderConfig encoder{.pose_dim = 3, .model_dim = 4, .word_dim = 4,
                        .joint_dim = 5, .vocab_size = 7, .max_frames = 6,
                        .max_tokens = 5};
  LossConfig loss;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Test hook: edits the analytic gradient before comparison.
  std::function<void(LossKind, ParamGrads&)> perturb;
};

struct ComponentError {
  LossKind loss = LossKind::kSumOfHinges;
  std::string tensor;
  // |a - n| / sqrt(|a|^2 + |n|^2) over the whole tensor (a analytic, n
  // numeric), 0 when both are zero.
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<ComponentError> components;
  double tolerance = 0.0;

  bool passed() const;
  // First component above tolerance, or nullptr.
  const ComponentError* worst_failure() const;
};

struct GradCheckBatch {
  std::vector<PoseSequence> motions;
  std::vector<TokenSequence> texts;
};
GradCheckBatch MakeGradCheckBatch(const EncoderConfig& encoder,
                                  std::size_t batch_size, std::uint64_t seed);
// The loss value of `kind` for the batch under `params`, with analytic
// gradients written to `grads` when non-null.
double BatchLossAndGrads(const EncoderParams& params, const GradCheckBatch& batch,
                         LossKind kind, const LossConfig& loss,
                         ParamGrads* grads);

GradCheckReport RunGradCheck(const GradCheckOptions& options);

}  // namespace droptriple

#endif  // DROPTRIPLE_GRADCHECK_HPP_
