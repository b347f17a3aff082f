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

#ifndef DROPTRIPLE_ENCODER_HPP_
#define DROPTRIPLE_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "droptriple/numeric.hpp"

namespace droptriple {

struct EncoderConfig {
  std::size_t pose_dim = 12;    // per-frame feature width
  std::size_t model_dim = 32;   // motion embedding width, even
  std::size_t word_dim = 32;    // token embedding width, even
  std::size_t joint_dim = 32;   // shared embedding width
  std::size_t vocab_size = 64;
  std::size_t max_frames = 1000;
  std::size_t max_tokens = 64;

  // Throws InvalidConfig naming the offending field.
  void Validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

// A motion sample: frames x pose_dim feature matrix.
struct PoseSequence {
  Matrix frames;
};

// A text sample: token ids, each < vocab_size.
struct TokenSequence {
  std::vector<std::size_t> tokens;
  bool operator==(const TokenSequence&) const = default;
};

struct MotionBranch {
  Matrix w_embed;  // pose_dim x model_dim
  Matrix b_embed;  // 1 x model_dim
  Matrix query;    // 1 x model_dim, learnable aggregation query
  Matrix w_proj;   // model_dim x joint_dim
  Matrix b_proj;   // 1 x joint_dim
  bool operator==(const MotionBranch&) const = default;
};

struct TextBranch {
  Matrix vocab;   // vocab_size x word_dim
  Matrix query;   // 1 x word_dim
  Matrix w_proj;  // word_dim x joint_dim
  Matrix b_proj;  // 1 x joint_dim
  bool operator==(const TextBranch&) const = default;
};

struct EncoderParams {
  EncoderConfig config;
  MotionBranch motion;
  TextBranch text;
  // Bumped by every in-place update; forward caches remember it so a
  // backward pass against modified parameters is rejected.
  std::uint64_t version = 0;

  // Visits every tensor in a fixed order with a stable name. The order
  // defines the layout of optimizer state and checkpoint blocks.
  void ForEachTensor(const std::function<void(std::string_view, Matrix&)>& fn);
  void ForEachTensor(
      const std::function<void(std::string_view, const Matrix&)>& fn) const;

  bool operator==(const EncoderParams& o) const {
    return config == o.config && motion == o.motion && text == o.text;
  }
};

// Gradients share the parameter layout.
using ParamGrads = EncoderParams;

ParamGrads ZerosLike(const EncoderParams& params);
// dst += src, tensor by tensor.
void AddInto(ParamGrads& dst, const ParamGrads& src);
void AddInto(MotionBranch& dst, const MotionBranch& src);
void AddInto(TextBranch& dst, const TextBranch& src);
double GlobalNorm(const ParamGrads& grads);

enum class Branch { kMotion, kText };

struct ForwardCache {
  Branch branch = Branch::kMotion;
  std::uint64_t params_version = 0;
  Matrix inputs;                    // motion frames (motion branch only)
  std::vector<std::size_t> tokens;  // token ids (text branch only)
  Matrix hidden;                    // per-element embedding incl. positions
  Vector weights;                   // pooling weights, sum to 1
  Vector pooled;
  Vector z;  // projected, pre-normalization
  double z_norm = 0.0;
  Vector embedding;  // z / |z|
};

// entry 2k = sin(p / 10000^(2k/dim)), entry 2k+1 = cos(same angle).
// Throws OddDimension for odd dim.
Vector PositionalEncoding(std::size_t position, std::size_t dim);

// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero, pooling queries
// drawn like a weight row. fan_in is the input width of each map; for the
// token table it is word_dim.
EncoderParams InitParams(const EncoderConfig& config, std::uint64_t seed);

ForwardCache EncodeMotion(const EncoderParams& params,
                          const PoseSequence& motion);
ForwardCache EncodeText(const EncoderParams& params,
                        const TokenSequence& text);

MotionBranch MotionBackward(const EncoderParams& params,
                            const ForwardCache& cache,
                            std::span<const double> grad_embedding);
TextBranch TextBackward(const EncoderParams& params, const ForwardCache& cache,
                        std::span<const double> grad_embedding);

// Dispatches on cache.branch; the untouched branch is returned as zeros.
ParamGrads EncoderBackward(const EncoderParams& params,
                           const ForwardCache& cache,
                           std::span<const double> grad_embedding);

void ValidatePose(const EncoderConfig& config, const PoseSequence& motion);
void ValidateTokens(const EncoderConfig& config, const TokenSequence& text);

}  // namespace droptriple

#endif  // DROPTRIPLE_ENCODER_HPP_
