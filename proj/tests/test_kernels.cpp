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

#include <doctest.h>

#include "droptriple/kernels.hpp"
#include "oracles.hpp"

using namespace droptriple;

namespace {

struct Workload {
  EncoderParams params;
  std::vector<PoseSequence> motions;
  std::vector<TokenSequence> texts;
  kernels::MotionRefs motion_refs;
  kernels::TextRefs text_refs;
};

Workload MakeWorkload(std::size_t n, std::uint64_t seed) {
  EncoderConfig c;
  c.pose_dim = 5;
  c.model_dim = 8;
  c.word_dim = 8;
  c.joint_dim = 6;
  c.vocab_size = 11;
  Workload w;
  w.params = InitParams(c, seed);
  Rng rng(seed + 1);
  for (std::size_t i = 0; i < n; ++i) {
    PoseSequence p{Matrix(2 + rng.UniformIndex(9), c.pose_dim)};
    for (double& x : p.frames.values()) x = rng.Gaussian(0.0, 1.0);
    w.motions.push_back(p);
    TokenSequence t;
    for (std::size_t k = 0, len = 1 + rng.UniformIndex(6); k < len; ++k)
      t.tokens.push_back(rng.UniformIndex(c.vocab_size));
    w.texts.push_back(t);
  }
  for (const auto& m : w.motions) w.motion_refs.push_back(&m);
  for (const auto& t : w.texts) w.text_refs.push_back(&t);
  return w;
}

}  // namespace

TEST_CASE("serial and parallel kernels agree bitwise") {
  const Workload w = MakeWorkload(37, 4);
  const auto ms = kernels::serial::EncodeMotions(w.params, w.motion_refs);
  const auto mp = kernels::parallel::EncodeMotions(w.params, w.motion_refs);
  const auto ts = kernels::serial::EncodeTexts(w.params, w.text_refs);
  const auto tp = kernels::parallel::EncodeTexts(w.params, w.text_refs);
  const Matrix em = kernels::StackEmbeddings(ms);
  const Matrix et = kernels::StackEmbeddings(ts);
  CHECK(em == kernels::StackEmbeddings(mp));
  CHECK(et == kernels::StackEmbeddings(tp));

  const Matrix gs = kernels::serial::Gram(em, et);
  CHECK(gs == kernels::parallel::Gram(em, et));

  Rng rng(2);
  const Matrix gm = oracle::RandomUnitRows(rng, 37, 6);
  const Matrix gt = oracle::RandomUnitRows(rng, 37, 6);
  CHECK(kernels::serial::BackwardMotions(w.params, ms, gm) ==
        kernels::parallel::BackwardMotions(w.params, mp, gm));
  CHECK(kernels::serial::BackwardTexts(w.params, ts, gt) ==
        kernels::parallel::BackwardTexts(w.params, tp, gt));

  kernels::RelevanceLists rel(37);
  for (std::size_t i = 0; i < 37; ++i) rel[i] = {i, (i * 7) % 37};
  CHECK(kernels::serial::RankQueries(gs, rel) == kernels::parallel::RankQueries(gs, rel));
}

TEST_CASE("batched backward equals the sum of per-sample backward passes") {
  const Workload w = MakeWorkload(5, 9);
  const auto ms = kernels::serial::EncodeMotions(w.params, w.motion_refs);
  Rng rng(3);
  const Matrix g = oracle::RandomUnitRows(rng, 5, 6);
  MotionBranch expected = MotionBackward(w.params, ms[0], g.row(0));
  for (std::size_t i = 1; i < 5; ++i) AddInto(expected, MotionBackward(w.params, ms[i], g.row(i)));
  CHECK(kernels::serial::BackwardMotions(w.params, ms, g) == expected);
}

TEST_CASE("gram matches the scalar oracle") {
  Rng rng(8);
  const Matrix a = oracle::RandomUnitRows(rng, 9, 4);
  const Matrix b = oracle::RandomUnitRows(rng, 7, 4);
  const Matrix s = kernels::parallel::Gram(a, b);
  const auto ra = oracle::ToRows(a), rb = oracle::ToRows(b);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 7; ++j) CHECK(std::abs(s(i, j) - oracle::Cos(ra[i], rb[j])) <= 1e-12);
}

TEST_CASE("best relevant rank") {
  const std::vector<double> row{0.9, 0.8, 0.95};
  CHECK(kernels::BestRelevantRank(row, {0}) == 2);
  CHECK(kernels::BestRelevantRank(row, {2}) == 1);
  const std::vector<double> ten{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0};
  CHECK(kernels::BestRelevantRank(ten, {2, 6}) == 3);
  // Ties resolve toward the smaller gallery index.
  const std::vector<double> tied{0.5, 0.5, 0.5};
  CHECK(kernels::BestRelevantRank(tied, {0}) == 1);
  CHECK(kernels::BestRelevantRank(tied, {2}) == 3);
  CHECK_THROWS(kernels::BestRelevantRank(row, {}));
  CHECK_THROWS(kernels::BestRelevantRank(row, {3}));
}
