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

#include <cmath>

#include "droptriple/error.hpp"
#include "droptriple/loss.hpp"
#include "oracles.hpp"

using namespace droptriple;

namespace {

const Matrix kMhFixture{{0.8, 0.75, 0.2}, {0.3, 0.7, 0.1}, {0.2, 0.4, 0.9}};

BatchEmbeddings RandomBatch(Rng& rng, std::size_t n, std::size_t d) {
  return {oracle::RandomUnitRows(rng, n, d), oracle::RandomUnitRows(rng, n, d)};
}

// Batch whose pairs and neighbors sit close together so hinges are active
// and intra-modal similarities spread over the threshold range.
BatchEmbeddings ClusteredBatch(Rng& rng, std::size_t n, std::size_t d) {
  const Matrix centers = oracle::RandomUnitRows(rng, 2, d);
  Matrix m(n, d), t(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.UniformIndex(2);
    const double spread = rng.Uniform(0.1, 0.8);
    for (std::size_t k = 0; k < d; ++k) {
      m(i, k) = centers(c, k) + spread * rng.Gaussian(0.0, 1.0);
      t(i, k) = centers(c, k) + spread * rng.Gaussian(0.0, 1.0);
    }
  }
  return {NormalizeRows(m), NormalizeRows(t)};
}

}  // namespace

TEST_CASE("sum of hinges fixtures") {
  const LossConfig cfg;
  CHECK(SumOfHingesFromSimilarity(Matrix{{0.6, 0.7}, {0.5, 0.55}}, cfg).value ==
        doctest::Approx(0.9).epsilon(1e-14));
  const Matrix separated{{1.0, -1.0, -1.0}, {-1.0, 1.0, -1.0}, {-1.0, -1.0, 1.0}};
  CHECK(SumOfHingesFromSimilarity(separated, cfg).value == 0.0);
  CHECK(SumOfHingesFromSimilarity(Matrix{{0.3}}, cfg).value == 0.0);
}

TEST_CASE("max of hinges fixtures") {
  const LossConfig cfg;
  const SimilarityLoss mh = MaxOfHingesFromSimilarity(kMhFixture, cfg);
  CHECK(mh.value == doctest::Approx(0.40).epsilon(1e-14));
  CHECK(mh.diagnostics.hardest_text[0] == 1);
  CHECK(mh.diagnostics.hardest_motion[1] == 0);
  const Matrix separated{{1.0, -1.0, -1.0}, {-1.0, 1.0, -1.0}, {-1.0, -1.0, 1.0}};
  CHECK(MaxOfHingesFromSimilarity(separated, cfg).value == 0.0);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const BatchEmbeddings b = RandomBatch(rng, 2, 4);
    const LossResult sh = SumOfHingesLoss(b, cfg);
    const LossResult mx = MaxOfHingesLoss(b, cfg);
    CHECK(sh.value == mx.value);
    CHECK(sh.grad_motion == mx.grad_motion);
    CHECK(sh.grad_text == mx.grad_text);
  }
}

TEST_CASE("max of hinges breaks ties toward the smaller index") {
  const Matrix s{{0.5, 0.6, 0.6}, {0.0, 0.5, 0.0}, {0.0, 0.0, 0.5}};
  const SimilarityLoss l = MaxOfHingesFromSimilarity(s, LossConfig{});
  CHECK(l.diagnostics.hardest_text[0] == 1);
}

TEST_CASE("false-negative masks") {
  const Matrix mm{{1.0, 0.85, 0.2}, {0.85, 1.0, 0.1}, {0.2, 0.1, 1.0}};
  const Matrix tt{{1.0, 0.65, 0.3}, {0.65, 1.0, 0.0}, {0.3, 0.0, 1.0}};
  const FalseNegMasks m = FalseNegativeMasksFromSimilarity(mm, tt, LossConfig{});
  CHECK(m.motion_side[0][1]);
  CHECK_FALSE(m.text_side[0][1]);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_FALSE(m.motion_side[i][i]);
    CHECK_FALSE(m.text_side[i][i]);
  }

  LossConfig open{0.2, 1.0, 1.0};
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const BatchEmbeddings b = RandomBatch(rng, 5, 3);
    const FalseNegMasks all_false = FalseNegativeMasks(b.motion, b.text, open);
    for (const auto& row : all_false.motion_side)
      for (bool x : row) CHECK_FALSE(x);
    for (const auto& row : all_false.text_side)
      for (bool x : row) CHECK_FALSE(x);

    const FalseNegMasks all_true =
        FalseNegativeMasks(b.motion, b.text, LossConfig{0.2, -1.0, -1.0});
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(all_true.motion_side[i][j] == (i != j));
        CHECK(all_true.text_side[i][j] == (i != j));
      }
  }
}

TEST_CASE("droptriple fixture") {
  const Matrix mm{{1.0, 0.85, 0.2}, {0.85, 1.0, 0.1}, {0.2, 0.1, 1.0}};
  const Matrix tt{{1.0, 0.65, 0.3}, {0.65, 1.0, 0.0}, {0.3, 0.0, 1.0}};
  const SimilarityLoss l = DropTripleFromSimilarity(kMhFixture, mm, tt, LossConfig{});
  CHECK(l.value == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(l.diagnostics.dropped_count_m == 2);
  CHECK(l.diagnostics.dropped_count_t == 0);
  CHECK(l.diagnostics.hardest_motion[1] == 2);
}

TEST_CASE("losses match the triple-loop oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.UniformIndex(8);
    const std::size_t d = 2 + rng.UniformIndex(15);
    const BatchEmbeddings b =
        trial % 2 ? RandomBatch(rng, n, d) : ClusteredBatch(rng, n, d);
    const LossConfig cfg{rng.Uniform(0.05, 0.5), rng.Uniform(0.0, 1.0),
                         rng.Uniform(0.0, 1.0)};
    const auto m = oracle::ToRows(b.motion), t = oracle::ToRows(b.text);
    for (LossKind kind : {LossKind::kSumOfHinges, LossKind::kMaxOfHinges,
                          LossKind::kDropTriple}) {
      const double expected =
          oracle::NaiveLoss(kind, m, t, cfg.alpha, cfg.delta_hetero, cfg.delta_homo);
      CHECK(std::abs(ComputeLoss(kind, b, cfg).value - expected) <= 1e-12);
    }
  }
}

TEST_CASE("droptriple with thresholds at one is max of hinges, bitwise") {
  Rng rng(8);
  const LossConfig cfg{0.2, 1.0, 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    const BatchEmbeddings b = ClusteredBatch(rng, 2 + rng.UniformIndex(7), 6);
    const LossResult dt = DropTripleLoss(b, cfg);
    const LossResult mh = MaxOfHingesLoss(b, cfg);
    CHECK(dt.value == mh.value);
    CHECK(dt.grad_motion == mh.grad_motion);
    CHECK(dt.grad_text == mh.grad_text);
  }
}

TEST_CASE("dominance: droptriple <= max of hinges <= sum of hinges") {
  Rng rng(12);
  int strict_dm = 0, strict_ms = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const BatchEmbeddings b = ClusteredBatch(rng, 2 + rng.UniformIndex(7), 5);
    const LossConfig cfg;
    const double sh = SumOfHingesLoss(b, cfg).value;
    const double mh = MaxOfHingesLoss(b, cfg).value;
    const double dt = DropTripleLoss(b, cfg).value;
    CHECK(dt <= mh);
    CHECK(mh <= sh);
    CHECK(dt >= 0.0);
    strict_dm += dt < mh;
    strict_ms += mh < sh;
  }
  CHECK(strict_dm > 0);
  CHECK(strict_ms > 0);
}

TEST_CASE("all negatives pruned: zero loss, zero gradient, every anchor empty") {
  // Every intra-modal similarity near 1.
  const std::size_t n = 6, d = 4;
  Rng rng(1);
  Matrix m(n, d), t(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      m(i, k) = (k == 0 ? 10.0 : 0.0) + 0.1 * rng.Gaussian(0.0, 1.0);
      t(i, k) = (k == 1 ? 10.0 : 0.0) + 0.1 * rng.Gaussian(0.0, 1.0);
    }
  const BatchEmbeddings b{NormalizeRows(m), NormalizeRows(t)};
  const LossResult r = DropTripleLoss(b, LossConfig{});
  CHECK(r.value == 0.0);
  CHECK(r.diagnostics.empty_negset_anchors == 2 * n);
  for (double x : r.grad_motion.values()) CHECK(x == 0.0);
  for (double x : r.grad_text.values()) CHECK(x == 0.0);
  CHECK(MaxOfHingesLoss(b, LossConfig{}).value > 0.0);
}

TEST_CASE("loss gradients match central differences") {
  Rng rng(31);
  const double eps = 1e-5;
  for (int trial = 0; trial < 30; ++trial) {
    const BatchEmbeddings b = ClusteredBatch(rng, 4, 6);
    const LossConfig cfg;
    for (LossKind kind : {LossKind::kSumOfHinges, LossKind::kMaxOfHinges,
                          LossKind::kDropTriple}) {
      const LossResult r = ComputeLoss(kind, b, cfg);
      // The oracle takes raw rows, so perturbed rows need not stay unit.
      auto value = [&](const Matrix& m, const Matrix& t) {
        return oracle::NaiveLoss(kind, oracle::ToRows(m), oracle::ToRows(t),
                                 cfg.alpha, cfg.delta_hetero, cfg.delta_homo);
      };
      for (int side = 0; side < 2; ++side) {
        Matrix m = b.motion, t = b.text;
        Matrix& target = side == 0 ? m : t;
        const Matrix& analytic = side == 0 ? r.grad_motion : r.grad_text;
        double diff = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < target.size(); ++k) {
          const double saved = target.values()[k];
          target.values()[k] = saved + eps;
          const double plus = value(m, t);
          target.values()[k] = saved - eps;
          const double minus = value(m, t);
          target.values()[k] = saved;
          const double numeric = (plus - minus) / (2.0 * eps);
          diff += std::pow(analytic.values()[k] - numeric, 2);
          scale += std::pow(analytic.values()[k], 2) + numeric * numeric;
        }
        INFO(LossKindName(kind) << " side " << side << " trial " << trial);
        if (scale > 0.0) CHECK(std::sqrt(diff / scale) <= 1e-4);
      }
    }
  }
}

TEST_CASE("droptriple gradient touches only the positive and chosen negatives") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const BatchEmbeddings b = ClusteredBatch(rng, 6, 5);
    const LossResult r = DropTripleLoss(b, LossConfig{});
    const auto& diag = r.diagnostics;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        if (r.grad_similarity(i, j) == 0.0) continue;
        const bool allowed = i == j || diag.hardest_text[i] == static_cast<long>(j) ||
                             diag.hardest_motion[j] == static_cast<long>(i);
        CHECK(allowed);
      }
  }
}

TEST_CASE("loss is invariant to reordering the pairs") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5;
    const BatchEmbeddings b = ClusteredBatch(rng, n, 4);
    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    BatchEmbeddings p{Matrix(n, 4), Matrix(n, 4)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < 4; ++k) {
        p.motion(i, k) = b.motion(perm[i], k);
        p.text(i, k) = b.text(perm[i], k);
      }
    for (LossKind kind : {LossKind::kSumOfHinges, LossKind::kMaxOfHinges,
                          LossKind::kDropTriple})
      CHECK(ComputeLoss(kind, b, LossConfig{}).value ==
            doctest::Approx(ComputeLoss(kind, p, LossConfig{}).value).epsilon(1e-12));
  }
}

TEST_CASE("loss input validation") {
  const BatchEmbeddings ragged{Matrix{{1.0, 0.0}}, Matrix{{1.0, 0.0}, {0.0, 1.0}}};
  CHECK_THROWS_AS(SumOfHingesLoss(ragged, LossConfig{}), Error);
  const BatchEmbeddings not_unit{Matrix{{2.0, 0.0}}, Matrix{{1.0, 0.0}}};
  CHECK_THROWS_AS(MaxOfHingesLoss(not_unit, LossConfig{}), Error);
  CHECK_THROWS_AS(LossConfig({0.0, 0.7, 0.9}).Validate(), Error);
  CHECK_THROWS_AS(LossConfig({0.2, 1.5, 0.9}).Validate(), Error);
  CHECK(ParseLossKind("mh") == LossKind::kMaxOfHinges);
  CHECK_THROWS_AS(ParseLossKind("contrastive"), Error);
}
