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

#include "droptriple/kernels.hpp"

#include <exception>
#include <string>

#include "droptriple/error.hpp"

#ifdef DROPTRIPLE_HAVE_OPENMP
#include <omp.h>
#endif

namespace droptriple::kernels {

namespace {

void GramRow(const Matrix& a, const Matrix& b, std::size_t i, Matrix& out) {
  auto ai = a.row(i);
  auto oi = out.row(i);
  for (std::size_t j = 0; j < b.rows(); ++j) oi[j] = Dot(ai, b.row(j));
}

void CheckGradRows(std::size_t items, const Matrix& grads) {
  if (grads.rows() != items) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(items) + " caches but " +
                    std::to_string(grads.rows()) + " gradient rows");
  }
}

// Runs body(i) for i in [0, n) across threads, rethrowing the first
// exception on the calling thread. OpenMP forbids exceptions escaping a
// parallel region.
template <typename Body>
void ParallelFor(std::size_t n, Body body) {
#ifdef DROPTRIPLE_HAVE_OPENMP
  std::exception_ptr failure;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(droptriple_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace

Matrix StackEmbeddings(const std::vector<ForwardCache>& caches) {
  if (caches.empty()) return Matrix();
  Matrix out(caches.size(), caches.front().embedding.size());
  for (std::size_t i = 0; i < caches.size(); ++i) {
    std::copy(caches[i].embedding.begin(), caches[i].embedding.end(),
              out.row(i).begin());
  }
  return out;
}

std::size_t BestRelevantRank(std::span<const double> scores,
                             const std::vector<std::size_t>& relevant) {
  if (relevant.empty()) {
    throw Error(ErrorCode::kMissingRelevance, "query has no relevant items");
  }
  std::size_t best = scores.size() + 1;
  for (std::size_t r : relevant) {
    if (r >= scores.size()) {
      throw Error(ErrorCode::kMissingRelevance,
                  "relevant gallery id " + std::to_string(r) +
                      " outside gallery of " + std::to_string(scores.size()));
    }
    const double sr = scores[r];
    std::size_t ahead = 0;
    for (std::size_t g = 0; g < scores.size(); ++g) {
      if (scores[g] > sr || (scores[g] == sr && g < r)) ++ahead;
    }
    best = std::min(best, ahead + 1);
  }
  return best;
}

int MaxThreads() {
#ifdef DROPTRIPLE_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

Matrix Gram(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) GramRow(a, b, i, out);
  return out;
}

std::vector<ForwardCache> EncodeMotions(const EncoderParams& params,
                                        const MotionRefs& items) {
  std::vector<ForwardCache> out;
  out.reserve(items.size());
  for (const PoseSequence* m : items) out.push_back(EncodeMotion(params, *m));
  return out;
}

std::vector<ForwardCache> EncodeTexts(const EncoderParams& params,
                                      const TextRefs& items) {
  std::vector<ForwardCache> out;
  out.reserve(items.size());
  for (const TokenSequence* t : items) out.push_back(EncodeText(params, *t));
  return out;
}

MotionBranch BackwardMotions(const EncoderParams& params,
                             const std::vector<ForwardCache>& caches,
                             const Matrix& grad_embeddings) {
  CheckGradRows(caches.size(), grad_embeddings);
  MotionBranch total = ZerosLike(params).motion;
  for (std::size_t i = 0; i < caches.size(); ++i) {
    AddInto(total, MotionBackward(params, caches[i], grad_embeddings.row(i)));
  }
  return total;
}

TextBranch BackwardTexts(const EncoderParams& params,
                         const std::vector<ForwardCache>& caches,
                         const Matrix& grad_embeddings) {
  CheckGradRows(caches.size(), grad_embeddings);
  TextBranch total = ZerosLike(params).text;
  for (std::size_t i = 0; i < caches.size(); ++i) {
    AddInto(total, TextBackward(params, caches[i], grad_embeddings.row(i)));
  }
  return total;
}

std::vector<std::size_t> RankQueries(const Matrix& similarity,
                                     const RelevanceLists& relevant) {
  std::vector<std::size_t> ranks(similarity.rows());
  for (std::size_t q = 0; q < similarity.rows(); ++q) {
    ranks[q] = BestRelevantRank(similarity.row(q), relevant[q]);
  }
  return ranks;
}

}  // namespace serial

namespace parallel {

Matrix Gram(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  ParallelFor(a.rows(), [&](std::size_t i) { GramRow(a, b, i, out); });
  return out;
}

std::vector<ForwardCache> EncodeMotions(const EncoderParams& params,
                                        const MotionRefs& items) {
  std::vector<ForwardCache> out(items.size());
  ParallelFor(items.size(),
              [&](std::size_t i) { out[i] = EncodeMotion(params, *items[i]); });
  return out;
}

std::vector<ForwardCache> EncodeTexts(const EncoderParams& params,
                                      const TextRefs& items) {
  std::vector<ForwardCache> out(items.size());
  ParallelFor(items.size(),
              [&](std::size_t i) { out[i] = EncodeText(params, *items[i]); });
  return out;
}

MotionBranch BackwardMotions(const EncoderParams& params,
                             const std::vector<ForwardCache>& caches,
                             const Matrix& grad_embeddings) {
  CheckGradRows(caches.size(), grad_embeddings);
  std::vector<MotionBranch> parts(caches.size());
  ParallelFor(caches.size(), [&](std::size_t i) {
    parts[i] = MotionBackward(params, caches[i], grad_embeddings.row(i));
  });
  MotionBranch total = ZerosLike(params).motion;
  for (const MotionBranch& p : parts) AddInto(total, p);
  return total;
}

TextBranch BackwardTexts(const EncoderParams& params,
                         const std::vector<ForwardCache>& caches,
                         const Matrix& grad_embeddings) {
  CheckGradRows(caches.size(), grad_embeddings);
  std::vector<TextBranch> parts(caches.size());
  ParallelFor(caches.size(), [&](std::size_t i) {
    parts[i] = TextBackward(params, caches[i], grad_embeddings.row(i));
  });
  TextBranch total = ZerosLike(params).text;
  for (const TextBranch& p : parts) AddInto(total, p);
  return total;
}

std::vector<std::size_t> RankQueries(const Matrix& similarity,
                                     const RelevanceLists& relevant) {
  std::vector<std::size_t> ranks(similarity.rows());
  ParallelFor(similarity.rows(), [&](std::size_t q) {
    ranks[q] = BestRelevantRank(similarity.row(q), relevant[q]);
  });
  return ranks;
}

}  // namespace parallel

}  // namespace droptriple::kernels
