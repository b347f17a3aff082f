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

#ifndef DROPTRIPLE_KERNELS_HPP_
#define DROPTRIPLE_KERNELS_HPP_

#include <cstddef>
#include <vector>

#include "droptriple/encoder.hpp"
#include "droptriple/numeric.hpp"

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; both produce bitwise-identical results because every
// per-item computation is independent and reductions run in item order
// after the parallel region.
namespace droptriple::kernels {

using MotionRefs = std::vector<const PoseSequence*>;
using TextRefs = std::vector<const TokenSequence*>;
using RelevanceLists = std::vector<std::vector<std::size_t>>;

namespace serial {

Matrix Gram(const Matrix& a, const Matrix& b);
std::vector<ForwardCache> EncodeMotions(const EncoderParams& params,
                                        const MotionRefs& items);
std::vector<ForwardCache> EncodeTexts(const EncoderParams& params,
                                      const TextRefs& items);
MotionBranch BackwardMotions(const EncoderParams& params,
                             const std::vector<ForwardCache>& caches,
                             const Matrix& grad_embeddings);
TextBranch BackwardTexts(const EncoderParams& params,
                         const std::vector<ForwardCache>& caches,
                         const Matrix& grad_embeddings);
std::vector<std::size_t> RankQueries(const Matrix& similarity,
                                     const RelevanceLists& relevant);

}  // namespace serial

namespace parallel {

Matrix Gram(const Matrix& a, const Matrix& b);
std::vector<ForwardCache> EncodeMotions(const EncoderParams& params,
                                        const MotionRefs& items);
std::vector<ForwardCache> EncodeTexts(const EncoderParams& params,
                                      const TextRefs& items);
MotionBranch BackwardMotions(const EncoderParams& params,
                             const std::vector<ForwardCache>& caches,
                             const Matrix& grad_embeddings);
TextBranch BackwardTexts(const EncoderParams& params,
                         const std::vector<ForwardCache>& caches,
                         const Matrix& grad_embeddings);
std::vector<std::size_t> RankQueries(const Matrix& similarity,
                                     const RelevanceLists& relevant);

}  // namespace parallel

// Rows of the cached embeddings stacked into an I x D matrix.
Matrix StackEmbeddings(const std::vector<ForwardCache>& caches);

// 1-based rank of the best-ranked relevant gallery item for one query row:
// gallery ordered by similarity descending, ties by ascending index.
std::size_t BestRelevantRank(std::span<const double> scores,
                             const std::vector<std::size_t>& relevant);

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int MaxThreads();

}  // namespace droptriple::kernels

#endif  // DROPTRIPLE_KERNELS_HPP_
