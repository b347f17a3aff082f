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

#ifndef DROPTRIPLE_LOSS_HPP_
#define DROPTRIPLE_LOSS_HPP_

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "droptriple/numeric.hpp"

namespace droptriple {

enum class LossKind { kSumOfHinges, kMaxOfHinges, kDropTriple };

std::string_view LossKindName(LossKind kind);  // "sh", "mh", "droptriple"
LossKind ParseLossKind(std::string_view name);  // InvalidConfig on unknown

struct LossConfig {
  double alpha = 0.2;          // margin
  double delta_hetero = 0.7;   // gates similarity in the retrieved modality
  double delta_homo = 0.9;     // gates similarity in the anchor modality

  void Validate() const;
  bool operator==(const LossConfig&) const = default;
};

// Row i of motion and row i of text form a positive pair; every other row
// of the retrieved modality is an in-batch negative.
struct BatchEmbeddings {
  Matrix motion;  // I x D, unit rows
  Matrix text;    // I x D, unit rows

  // InvalidBatch unless I >= 1, shapes agree and rows are unit within 1e-9.
  void Validate() const;
  std::size_t size() const { return motion.rows(); }
};

// Entry (i, j) true when negative j is treated as a false negative for
// anchor i. motion_side prunes motions for the text anchor t_i, text_side
// prunes texts for the motion anchor m_i. Diagonals are always false.
struct FalseNegMasks {
  std::vector<std::vector<bool>> motion_side;
  std::vector<std::vector<bool>> text_side;
};

struct MiningDiagnostics {
  std::size_t dropped_count_m = 0;  // pruned motion negatives, all anchors
  std::size_t dropped_count_t = 0;  // pruned text negatives, all anchors
  std::size_t empty_negset_anchors = 0;
  // Hardest negative chosen per anchor, -1 when that direction has no
  // candidate. Unused (all -1) for the sum-of-hinges loss.
  std::vector<long> hardest_text;    // t' / t'' for motion anchor i
  std::vector<long> hardest_motion;  // m' / m'' for text anchor i
};

// Loss expressed on the cross-modal similarity matrix S = M T^T.
struct SimilarityLoss {
  double value = 0.0;
  Matrix grad_similarity;  // dL/dS
  MiningDiagnostics diagnostics;
};

struct LossResult {
  double value = 0.0;
  Matrix grad_similarity;
  Matrix grad_motion;  // I x D
  Matrix grad_text;    // I x D
  MiningDiagnostics diagnostics;
};

// Similarity-level forms. S must be square.
SimilarityLoss SumOfHingesFromSimilarity(const Matrix& s,
                                         const LossConfig& cfg);
SimilarityLoss MaxOfHingesFromSimilarity(const Matrix& s,
                                         const LossConfig& cfg);
SimilarityLoss DropTripleFromSimilarity(const Matrix& s,
                                        const Matrix& motion_self,
                                        const Matrix& text_self,
                                        const LossConfig& cfg);

// Masks from intra-modal similarities. Similarities are clamped to [-1, 1]
// before the strict comparison, so thresholds of 1.0 never prune.
FalseNegMasks FalseNegativeMasksFromSimilarity(const Matrix& motion_self,
                                               const Matrix& text_self,
                                               const LossConfig& cfg);
FalseNegMasks FalseNegativeMasks(const Matrix& motion, const Matrix& text,
                                 const LossConfig& cfg);

LossResult SumOfHingesLoss(const BatchEmbeddings& batch, const LossConfig& cfg);
LossResult MaxOfHingesLoss(const BatchEmbeddings& batch, const LossConfig& cfg);
LossResult DropTripleLoss(const BatchEmbeddings& batch, const LossConfig& cfg);
LossResult ComputeLoss(LossKind kind, const BatchEmbeddings& batch,
                       const LossConfig& cfg);

// Chain rule through S = M T^T: dM = dS T, dT = dS^T M.
std::pair<Matrix, Matrix> LossBackwardToEmbeddings(const Matrix& grad_similarity,
                                                   const BatchEmbeddings& batch);

}  // namespace droptriple

#endif  // DROPTRIPLE_LOSS_HPP_
