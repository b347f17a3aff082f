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

#include "droptriple/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "droptriple/error.hpp"

namespace droptriple {

std::string_view LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kSumOfHinges: return "sh";
    case LossKind::kMaxOfHinges: return "mh";
    case LossKind::kDropTriple: return "droptriple";
  }
  return "unknown";
}

LossKind ParseLossKind(std::string_view name) {
  if (name == "sh") return LossKind::kSumOfHinges;
  if (name == "mh") return LossKind::kMaxOfHinges;
  if (name == "droptriple") return LossKind::kDropTriple;
  throw Error(ErrorCode::kInvalidConfig,
              "loss must be one of sh|mh|droptriple, got '" +
                  std::string(name) + "'");
}

void LossConfig::Validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must be > 0");
  }
  auto in_range = [](double d) { return d >= -1.0 && d <= 1.0; };
  if (!in_range(delta_hetero)) {
    throw Error(ErrorCode::kInvalidConfig, "delta_hetero must lie in [-1, 1]");
  }
  if (!in_range(delta_homo)) {
    throw Error(ErrorCode::kInvalidConfig, "delta_homo must lie in [-1, 1]");
  }
}

void BatchEmbeddings::Validate() const {
  if (motion.rows() == 0) throw Error(ErrorCode::kInvalidBatch, "empty batch");
  if (motion.rows() != text.rows() || motion.cols() != text.cols()) {
    throw Error(ErrorCode::kInvalidBatch,
                "motion " + std::to_string(motion.rows()) + "x" +
                    std::to_string(motion.cols()) + " vs text " +
                    std::to_string(text.rows()) + "x" +
                    std::to_string(text.cols()));
  }
  for (const Matrix* m : {&motion, &text}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      const double n = Norm(m->row(r));
      if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) {
        throw Error(ErrorCode::kInvalidBatch,
                    "row " + std::to_string(r) + " is not unit norm");
      }
    }
  }
}

namespace {

void CheckSquare(const Matrix& s, const char* name) {
  if (s.rows() == 0 || s.rows() != s.cols()) {
    throw Error(ErrorCode::kInvalidBatch,
                std::string(name) + " must be a non-empty square matrix");
  }
  if (!s.all_finite()) {
    throw Error(ErrorCode::kInvalidBatch,
                std::string(name) + " has non-finite entries");
  }
}

double Hinge(double x) { return x > 0.0 ? x : 0.0; }

double Clamp(double s) { return std::clamp(s, -1.0, 1.0); }

// Max-of-hinges over the candidates left by the masks. With all-false masks
// this is exactly the max-of-hinges loss.
SimilarityLoss HardestNegativeLoss(const Matrix& s, const FalseNegMasks& masks,
                                   const LossConfig& cfg) {
  const std::size_t n = s.rows();
  SimilarityLoss out;
  out.grad_similarity = Matrix(n, n);
  auto& diag = out.diagnostics;
  diag.hardest_text.assign(n, -1);
  diag.hardest_motion.assign(n, -1);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      diag.dropped_count_t += masks.text_side[i][j] ? 1 : 0;
      diag.dropped_count_m += masks.motion_side[i][j] ? 1 : 0;
    }
  }

  Matrix& ds = out.grad_similarity;
  for (std::size_t i = 0; i < n; ++i) {
    const double positive = s(i, i);

    // Motion anchor m_i against texts: row i.
    long best_t = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || masks.text_side[i][j]) continue;
      if (best_t < 0 || s(i, j) > s(i, static_cast<std::size_t>(best_t))) {
        best_t = static_cast<long>(j);
      }
    }
    // Text anchor t_i against motions: column i.
    long best_m = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || masks.motion_side[i][j]) continue;
      if (best_m < 0 || s(j, i) > s(static_cast<std::size_t>(best_m), i)) {
        best_m = static_cast<long>(j);
      }
    }
    diag.hardest_text[i] = best_t;
    diag.hardest_motion[i] = best_m;

    if (best_t < 0) {
      ++diag.empty_negset_anchors;
    } else {
      const auto j = static_cast<std::size_t>(best_t);
      const double term = cfg.alpha - positive + s(i, j);
      out.value += Hinge(term);
      if (term > 0.0) {
        ds(i, i) -= 1.0;
        ds(i, j) += 1.0;
      }
    }
    if (best_m < 0) {
      ++diag.empty_negset_anchors;
    } else {
      const auto j = static_cast<std::size_t>(best_m);
      const double term = cfg.alpha - positive + s(j, i);
      out.value += Hinge(term);
      if (term > 0.0) {
        ds(i, i) -= 1.0;
        ds(j, i) += 1.0;
      }
    }
  }
  return out;
}

FalseNegMasks EmptyMasks(std::size_t n) {
  return {std::vector<std::vector<bool>>(n, std::vector<bool>(n, false)),
          std::vector<std::vector<bool>>(n, std::vector<bool>(n, false))};
}

LossResult Lift(SimilarityLoss loss, const BatchEmbeddings& batch) {
  LossResult r;
  r.value = loss.value;
  auto [gm, gt] = LossBackwardToEmbeddings(loss.grad_similarity, batch);
  r.grad_similarity = std::move(loss.grad_similarity);
  r.grad_motion = std::move(gm);
  r.grad_text = std::move(gt);
  r.diagnostics = std::move(loss.diagnostics);
  return r;
}

}  // namespace

SimilarityLoss SumOfHingesFromSimilarity(const Matrix& s,
                                         const LossConfig& cfg) {
  cfg.Validate();
  CheckSquare(s, "similarity");
  const std::size_t n = s.rows();
  SimilarityLoss out;
  out.grad_similarity = Matrix(n, n);
  out.diagnostics.hardest_text.assign(n, -1);
  out.diagnostics.hardest_motion.assign(n, -1);
  Matrix& ds = out.grad_similarity;
  for (std::size_t i = 0; i < n; ++i) {
    const double positive = s(i, i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double term = cfg.alpha - positive + s(i, j);
      out.value += Hinge(term);
      if (term > 0.0) {
        ds(i, i) -= 1.0;
        ds(i, j) += 1.0;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double term = cfg.alpha - positive + s(j, i);
      out.value += Hinge(term);
      if (term > 0.0) {
        ds(i, i) -= 1.0;
        ds(j, i) += 1.0;
      }
    }
  }
  return out;
}

SimilarityLoss MaxOfHingesFromSimilarity(const Matrix& s,
                                         const LossConfig& cfg) {
  cfg.Validate();
  CheckSquare(s, "similarity");
  return HardestNegativeLoss(s, EmptyMasks(s.rows()), cfg);
}

FalseNegMasks FalseNegativeMasksFromSimilarity(const Matrix& motion_self,
                                               const Matrix& text_self,
                                               const LossConfig& cfg) {
  cfg.Validate();
  CheckSquare(motion_self, "motion self-similarity");
  CheckSquare(text_self, "text self-similarity");
  if (motion_self.rows() != text_self.rows()) {
    throw Error(ErrorCode::kInvalidBatch,
                "self-similarity matrices differ in size");
  }
  const std::size_t n = motion_self.rows();
  FalseNegMasks masks = EmptyMasks(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double mm = Clamp(motion_self(i, j));
      const double tt = Clamp(text_self(i, j));
      // Text anchor retrieving motions: motion is the hetero modality.
      masks.motion_side[i][j] = mm > cfg.delta_hetero || tt > cfg.delta_homo;
      // Motion anchor retrieving texts: text is the hetero modality.
      masks.text_side[i][j] = tt > cfg.delta_hetero || mm > cfg.delta_homo;
    }
  }
  return masks;
}

FalseNegMasks FalseNegativeMasks(const Matrix& motion, const Matrix& text,
                                 const LossConfig& cfg) {
  BatchEmbeddings{motion, text}.Validate();
  return FalseNegativeMasksFromSimilarity(InnerProducts(motion, motion),
                                          InnerProducts(text, text), cfg);
}

SimilarityLoss DropTripleFromSimilarity(const Matrix& s,
                                        const Matrix& motion_self,
                                        const Matrix& text_self,
                                        const LossConfig& cfg) {
  CheckSquare(s, "similarity");
  if (motion_self.rows() != s.rows()) {
    throw Error(ErrorCode::kInvalidBatch,
                "self-similarity size does not match the batch");
  }
  const FalseNegMasks masks =
      FalseNegativeMasksFromSimilarity(motion_self, text_self, cfg);
  return HardestNegativeLoss(s, masks, cfg);
}

LossResult SumOfHingesLoss(const BatchEmbeddings& batch,
                           const LossConfig& cfg) {
  batch.Validate();
  return Lift(SumOfHingesFromSimilarity(
                  InnerProducts(batch.motion, batch.text), cfg),
              batch);
}

LossResult MaxOfHingesLoss(const BatchEmbeddings& batch,
                           const LossConfig& cfg) {
  batch.Validate();
  return Lift(MaxOfHingesFromSimilarity(
                  InnerProducts(batch.motion, batch.text), cfg),
              batch);
}

LossResult DropTripleLoss(const BatchEmbeddings& batch,
                          const LossConfig& cfg) {
  batch.Validate();
  return Lift(DropTripleFromSimilarity(
                  InnerProducts(batch.motion, batch.text),
                  InnerProducts(batch.motion, batch.motion),
                  InnerProducts(batch.text, batch.text), cfg),
              batch);
}

LossResult ComputeLoss(LossKind kind, const BatchEmbeddings& batch,
                       const LossConfig& cfg) {
  switch (kind) {
    case LossKind::kSumOfHinges: return SumOfHingesLoss(batch, cfg);
    case LossKind::kMaxOfHinges: return MaxOfHingesLoss(batch, cfg);
    case LossKind::kDropTriple: return DropTripleLoss(batch, cfg);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown loss kind");
}

std::pair<Matrix, Matrix> LossBackwardToEmbeddings(
    const Matrix& grad_similarity, const BatchEmbeddings& batch) {
  const std::size_t n = batch.motion.rows();
  const std::size_t d = batch.motion.cols();
  if (grad_similarity.rows() != n || grad_similarity.cols() != n) {
    throw Error(ErrorCode::kInvalidBatch, "similarity gradient shape");
  }
  Matrix gm(n, d);
  Matrix gt(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double g = grad_similarity(i, j);
      if (g == 0.0) continue;
      auto mi = batch.motion.row(i);
      auto tj = batch.text.row(j);
      auto gmi = gm.row(i);
      auto gtj = gt.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        gmi[k] += g * tj[k];
        gtj[k] += g * mi[k];
      }
    }
  }
  return {std::move(gm), std::move(gt)};
}

}  // namespace droptriple
