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

#include "droptriple/optim.hpp"

#include <cmath>
#include <string>

#include "droptriple/error.hpp"

namespace droptriple {

OptimizerState MakeOptimizerState(const EncoderParams& params, double beta1,
                                  double beta2, double epsilon) {
  OptimizerState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  params.ForEachTensor([&](std::string_view, const Matrix& m) {
    s.first_moment.emplace_back(m.rows(), m.cols());
    s.second_moment.emplace_back(m.rows(), m.cols());
  });
  return s;
}

void AdamWUpdate(std::span<double> theta, std::span<const double> grad,
                 std::span<double> first_moment,
                 std::span<double> second_moment, std::uint64_t step,
                 double lr, double weight_decay, double beta1, double beta2,
                 double epsilon) {
  if (grad.size() != theta.size() || first_moment.size() != theta.size() ||
      second_moment.size() != theta.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "AdamW tensor of " + std::to_string(theta.size()) +
                    " entries got gradient of " + std::to_string(grad.size()));
  }
  if (step == 0) {
    throw Error(ErrorCode::kShapeMismatch, "AdamW step index starts at 1");
  }
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    first_moment[i] = beta1 * first_moment[i] + (1.0 - beta1) * g;
    second_moment[i] = beta2 * second_moment[i] + (1.0 - beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    theta[i] -= lr * (m_hat / (std::sqrt(v_hat) + epsilon) +
                      weight_decay * theta[i]);
  }
}

void AdamWStep(EncoderParams& params, const ParamGrads& grads,
               OptimizerState& state, double lr, double weight_decay) {
  std::vector<std::span<const double>> grad_views;
  grads.ForEachTensor([&](std::string_view, const Matrix& m) {
    grad_views.push_back(m.values());
  });
  std::size_t count = 0;
  params.ForEachTensor([&](std::string_view, Matrix&) { ++count; });
  if (grad_views.size() != count || state.first_moment.size() != count ||
      state.second_moment.size() != count) {
    throw Error(ErrorCode::kShapeMismatch,
                "optimizer state does not match the parameter set");
  }
  std::size_t k = 0;
  params.ForEachTensor([&](std::string_view name, Matrix& m) {
    if (state.first_moment[k].size() != m.size() ||
        state.second_moment[k].size() != m.size() ||
        grad_views[k].size() != m.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "gradient or optimizer state for " + std::string(name));
    }
    ++k;
  });
  ++state.step;
  k = 0;
  params.ForEachTensor([&](std::string_view, Matrix& m) {
    AdamWUpdate(m.values(), grad_views[k], state.first_moment[k].values(),
                state.second_moment[k].values(), state.step, lr, weight_decay,
                state.beta1, state.beta2, state.epsilon);
    ++k;
  });
  ++params.version;
}

}  // namespace droptriple
