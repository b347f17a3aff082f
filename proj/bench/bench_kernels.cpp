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


// Serial reference kernels against their OpenMP counterparts. Sizes follow
// a training batch (32 pairs) and a test-split evaluation (100 x ~300).

#include <benchmark/benchmark.h>

#include "droptriple/kernels.hpp"

using namespace droptriple;

namespace {

EncoderConfig BenchEncoder() {
  EncoderConfig c;
  c.pose_dim = 12;
  c.vocab_size = 40;
  return c;
}

Matrix RandomMatrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = rng.Gaussian(0.0, 1.0);
  return m;
}

struct Workload {
  EncoderParams params;
  std::vector<PoseSequence> motions;
  std::vector<TokenSequence> texts;
  kernels::MotionRefs motion_refs;
  kernels::TextRefs text_refs;

  explicit Workload(std::size_t n) : params(InitParams(BenchEncoder(), 1)) {
    Rng rng(2);
    const EncoderConfig c = BenchEncoder();
    for (std::size_t i = 0; i < n; ++i) {
      motions.push_back({RandomMatrix(rng, 12 + rng.UniformIndex(24), c.pose_dim)});
      TokenSequence t;
      for (std::size_t k = 0, len = 3 + rng.UniformIndex(8); k < len; ++k)
        t.tokens.push_back(rng.UniformIndex(c.vocab_size));
      texts.push_back(t);
    }
    for (const auto& m : motions) motion_refs.push_back(&m);
    for (const auto& t : texts) text_refs.push_back(&t);
  }
};

template <Matrix (*Gram)(const Matrix&, const Matrix&)>
void BM_Gram(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = RandomMatrix(rng, n, 32), b = RandomMatrix(rng, 3 * n, 32);
  for (auto _ : state) benchmark::DoNotOptimize(Gram(a, b));
}

template <std::vector<ForwardCache> (*Encode)(const EncoderParams&,
                                              const kernels::MotionRefs&)>
void BM_EncodeMotions(benchmark::State& state) {
  const Workload w(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Encode(w.params, w.motion_refs));
}

template <std::vector<ForwardCache> (*Encode)(const EncoderParams&,
                                              const kernels::TextRefs&)>
void BM_EncodeTexts(benchmark::State& state) {
  const Workload w(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Encode(w.params, w.text_refs));
}

template <MotionBranch (*Backward)(const EncoderParams&, const std::vector<ForwardCache>&,
                                   const Matrix&)>
void BM_BackwardMotions(benchmark::State& state) {
  const Workload w(static_cast<std::size_t>(state.range(0)));
  const auto caches = kernels::serial::EncodeMotions(w.params, w.motion_refs);
  Rng rng(4);
  const Matrix grad = RandomMatrix(rng, caches.size(), w.params.config.joint_dim);
  for (auto _ : state) benchmark::DoNotOptimize(Backward(w.params, caches, grad));
}

template <std::vector<std::size_t> (*Rank)(const Matrix&, const kernels::RelevanceLists&)>
void BM_RankQueries(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix s = RandomMatrix(rng, 3 * n, n);
  kernels::RelevanceLists relevant(3 * n);
  for (std::size_t q = 0; q < relevant.size(); ++q) relevant[q] = {q / 3};
  for (auto _ : state) benchmark::DoNotOptimize(Rank(s, relevant));
}

}  // namespace

BENCHMARK(BM_Gram<kernels::serial::Gram>)->Name("Gram/serial")->Arg(32)->Arg(100);
BENCHMARK(BM_Gram<kernels::parallel::Gram>)->Name("Gram/parallel")->Arg(32)->Arg(100);
BENCHMARK(BM_EncodeMotions<kernels::serial::EncodeMotions>)
    ->Name("EncodeMotions/serial")->Arg(32)->Arg(100);
BENCHMARK(BM_EncodeMotions<kernels::parallel::EncodeMotions>)
    ->Name("EncodeMotions/parallel")->Arg(32)->Arg(100);
BENCHMARK(BM_EncodeTexts<kernels::serial::EncodeTexts>)
    ->Name("EncodeTexts/serial")->Arg(32)->Arg(100);
BENCHMARK(BM_EncodeTexts<kernels::parallel::EncodeTexts>)
    ->Name("EncodeTexts/parallel")->Arg(32)->Arg(100);
BENCHMARK(BM_BackwardMotions<kernels::serial::BackwardMotions>)
    ->Name("BackwardMotions/serial")->Arg(32);
BENCHMARK(BM_BackwardMotions<kernels::parallel::BackwardMotions>)
    ->Name("BackwardMotions/parallel")->Arg(32);
BENCHMARK(BM_RankQueries<kernels::serial::RankQueries>)
    ->Name("RankQueries/serial")->Arg(100)->Arg(300);
BENCHMARK(BM_RankQueries<kernels::parallel::RankQueries>)
    ->Name("RankQueries/parallel")->Arg(100)->Arg(300);

BENCHMARK_MAIN();
