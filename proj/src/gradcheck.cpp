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

#include "droptriple/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "droptriple/kernels.hpp"

namespace droptriple {

bool GradCheckReport::passed() const { return worst_failure() == nullptr; }

const ComponentError* GradCheckReport::worst_failure() const {
  const ComponentError* worst = nullptr;
  for (const ComponentError& c : components) {
    if (!(c.relative_error <= tolerance) &&
        (!worst || c.relative_error > worst->relative_error)) {
      worst = &c;
    }
  }
  return worst;
}

GradCheckBatch MakeGradCheckBatch(const EncoderConfig& encoder,
                                  std::size_t batch_size, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "gradcheck/batch"));
  GradCheckBatch batch;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t frames = 1 + rng.UniformIndex(encoder.max_frames);
    PoseSequence m{Matrix(frames, encoder.pose_dim)};
    for (double& x : m.frames.values()) x = rng.Gaussian(0.0, 1.0);
    batch.motions.push_back(std::move(m));
    TokenSequence t;
    const std::size_t length = 1 + rng.UniformIndex(encoder.max_tokens);
    for (std::size_t k = 0; k < length; ++k) {
      t.tokens.push_back(rng.UniformIndex(encoder.vocab_size));
    }
    batch.texts.push_back(std::move(t));
  }
  return batch;
}

double BatchLossAndGrads(const EncoderParams& params, const GradCheckBatch& batch,
                         LossKind kind, const LossConfig& loss,
                         ParamGrads* grads) {
  kernels::MotionRefs motions;
  kernels::TextRefs texts;
  for (const auto& m : batch.motions) motions.push_back(&m);
  for (const auto& t : batch.texts) texts.push_back(&t);
  const auto mc = kernels::serial::EncodeMotions(params, motions);
  const auto tc = kernels::serial::EncodeTexts(params, texts);
  const BatchEmbeddings embedded{kernels::StackEmbeddings(mc),
                                 kernels::StackEmbeddings(tc)};
  const LossResult result = ComputeLoss(kind, embedded, loss);
  if (grads) {
    *grads = ZerosLike(params);
    grads->motion = kernels::serial::BackwardMotions(params, mc, result.grad_motion);
    grads->text = kernels::serial::BackwardTexts(params, tc, result.grad_text);
  }
  return result.value;
}

GradCheckReport RunGradCheck(const GradCheckOptions& options) {
  options.encoder.Validate();
  options.loss.Validate();
  const EncoderParams base =
      InitParams(options.encoder, DeriveSeed(options.seed, "gradcheck/params"));
  const GradCheckBatch batch =
      MakeGradCheckBatch(options.encoder, options.batch_size, options.seed);

  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (LossKind kind : {LossKind::kSumOfHinges, LossKind::kMaxOfHinges,
                        LossKind::kDropTriple}) {
    ParamGrads analytic;
    BatchLossAndGrads(base, batch, kind, options.loss, &analytic);
    if (options.perturb) options.perturb(kind, analytic);

    std::vector<const Matrix*> analytic_tensors;
    analytic.ForEachTensor(
        [&](std::string_view, const Matrix& m) { analytic_tensors.push_back(&m); });

    EncoderParams probe = base;
    std::size_t index = 0;
    probe.ForEachTensor([&](std::string_view name, Matrix& tensor) {
      const Matrix& a = *analytic_tensors[index++];
      double diff = 0.0, scale = 0.0;
      for (std::size_t k = 0; k < tensor.values().size(); ++k) {
        double& theta = tensor.values()[k];
        const double saved = theta;
        theta = saved + options.epsilon;
        const double plus = BatchLossAndGrads(probe, batch, kind, options.loss, nullptr);
        theta = saved - options.epsilon;
        const double minus = BatchLossAndGrads(probe, batch, kind, options.loss, nullptr);
        theta = saved;
        const double numeric = (plus - minus) / (2.0 * options.epsilon);
        const double exact = a.values()[k];
        diff += (exact - numeric) * (exact - numeric);
        scale += exact * exact + numeric * numeric;
      }
      // Normalized by the combined magnitude so a tensor whose gradient is
      // identically zero on both sides reports exactly 0.
      const double denom = std::sqrt(scale);
      report.components.push_back(
          {kind, std::string(name), denom > 0.0 ? std::sqrt(diff) / denom : 0.0});
    });
  }
  return report;
}

}  // namespace droptriple
