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

#include "droptriple/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "droptriple/error.hpp"

namespace droptriple {

void EncoderConfig::Validate() const {
  auto require = [](bool ok, const char* field, const std::string& why) {
    if (!ok) {
      throw Error(ErrorCode::kInvalidConfig, std::string(field) + " " + why);
    }
  };
  require(pose_dim > 0, "pose_dim", "must be positive");
  require(model_dim > 0 && model_dim % 2 == 0, "model_dim",
          "must be positive and even");
  require(word_dim > 0 && word_dim % 2 == 0, "word_dim",
          "must be positive and even");
  require(joint_dim > 0, "joint_dim", "must be positive");
  require(vocab_size > 0, "vocab_size", "must be positive");
  require(max_frames > 0, "max_frames", "must be positive");
  require(max_tokens > 0, "max_tokens", "must be positive");
}

void EncoderParams::ForEachTensor(
    const std::function<void(std::string_view, Matrix&)>& fn) {
  fn("motion.w_embed", motion.w_embed);
  fn("motion.b_embed", motion.b_embed);
  fn("motion.query", motion.query);
  fn("motion.w_proj", motion.w_proj);
  fn("motion.b_proj", motion.b_proj);
  fn("text.vocab", text.vocab);
  fn("text.query", text.query);
  fn("text.w_proj", text.w_proj);
  fn("text.b_proj", text.b_proj);
}

void EncoderParams::ForEachTensor(
    const std::function<void(std::string_view, const Matrix&)>& fn) const {
  const_cast<EncoderParams*>(this)->ForEachTensor(
      [&](std::string_view name, Matrix& m) { fn(name, m); });
}

namespace {

MotionBranch ZeroMotion(const EncoderConfig& c) {
  return {Matrix(c.pose_dim, c.model_dim), Matrix(1, c.model_dim),
          Matrix(1, c.model_dim), Matrix(c.model_dim, c.joint_dim),
          Matrix(1, c.joint_dim)};
}

TextBranch ZeroText(const EncoderConfig& c) {
  return {Matrix(c.vocab_size, c.word_dim), Matrix(1, c.word_dim),
          Matrix(c.word_dim, c.joint_dim), Matrix(1, c.joint_dim)};
}

void AddMatrix(Matrix& dst, const Matrix& src) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient accumulation shapes");
  }
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double AngleRate(std::size_t pair, std::size_t dim) {
  return std::pow(10000.0, static_cast<double>(2 * pair) /
                               static_cast<double>(dim));
}

// Rows of positional encodings, grown on demand and kept per thread. Entries
// are computed with the same expression as PositionalEncoding.
const double* PositionRow(std::size_t position, std::size_t dim) {
  thread_local std::unordered_map<std::size_t, Matrix> tables;
  Matrix& table = tables[dim];
  if (table.rows() <= position) {
    const std::size_t old_rows = table.rows();
    const std::size_t new_rows = std::max<std::size_t>(position + 1, 64);
    Matrix grown(std::max(new_rows, 2 * old_rows), dim);
    for (std::size_t r = 0; r < grown.rows(); ++r) {
      const Vector pe = PositionalEncoding(r, dim);
      std::copy(pe.begin(), pe.end(), grown.row(r).begin());
    }
    table = std::move(grown);
  }
  return table.row(position).data();
}

// Shared tail of both encoders: attention pooling with a learnable query,
// affine projection, and normalization. cache.hidden must be filled.
void PoolAndProject(const Matrix& query, const Matrix& w_proj,
                    const Matrix& b_proj, ForwardCache& cache) {
  const Matrix& h = cache.hidden;
  const std::size_t n = h.rows();
  const std::size_t width = h.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));

  Vector scores(n);
  for (std::size_t f = 0; f < n; ++f) {
    scores[f] = Dot(query.row(0), h.row(f)) * scale;
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  cache.weights.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    cache.weights[f] = std::exp(scores[f] - top);
    total += cache.weights[f];
  }
  for (double& w : cache.weights) w /= total;

  cache.pooled.assign(width, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    const double a = cache.weights[f];
    auto hf = h.row(f);
    for (std::size_t k = 0; k < width; ++k) cache.pooled[k] += a * hf[k];
  }

  const std::size_t out = w_proj.cols();
  cache.z.assign(out, 0.0);
  for (std::size_t k = 0; k < width; ++k) {
    const double p = cache.pooled[k];
    auto wk = w_proj.row(k);
    for (std::size_t d = 0; d < out; ++d) cache.z[d] += p * wk[d];
  }
  for (std::size_t d = 0; d < out; ++d) cache.z[d] += b_proj(0, d);

  cache.z_norm = Norm(cache.z);
  cache.embedding = L2Normalize(cache.z);
}

// Backward through PoolAndProject. Returns d(hidden); accumulates into the
// query and projection gradients.
Matrix PoolAndProjectBackward(const Matrix& query, const Matrix& w_proj,
                              const ForwardCache& cache,
                              std::span<const double> grad_embedding,
                              Matrix& d_query, Matrix& d_w_proj,
                              Matrix& d_b_proj) {
  const Matrix& h = cache.hidden;
  const std::size_t n = h.rows();
  const std::size_t width = h.cols();
  const std::size_t out = w_proj.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));

  // Jacobian of z / |z| is (I - e e^T) / |z|.
  const double radial = Dot(cache.embedding, grad_embedding);
  Vector dz(out);
  for (std::size_t d = 0; d < out; ++d) {
    dz[d] = (grad_embedding[d] - cache.embedding[d] * radial) / cache.z_norm;
  }

  Vector d_pooled(width, 0.0);
  for (std::size_t k = 0; k < width; ++k) {
    const double p = cache.pooled[k];
    auto wk = w_proj.row(k);
    auto gk = d_w_proj.row(k);
    double acc = 0.0;
    for (std::size_t d = 0; d < out; ++d) {
      gk[d] += p * dz[d];
      acc += wk[d] * dz[d];
    }
    d_pooled[k] = acc;
  }
  for (std::size_t d = 0; d < out; ++d) d_b_proj(0, d) += dz[d];

  Vector d_weight(n);
  double mean = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    d_weight[f] = Dot(h.row(f), d_pooled);
    mean += cache.weights[f] * d_weight[f];
  }

  Matrix d_hidden(n, width);
  auto q = query.row(0);
  auto dq = d_query.row(0);
  for (std::size_t f = 0; f < n; ++f) {
    const double a = cache.weights[f];
    const double d_score = a * (d_weight[f] - mean) * scale;
    auto hf = h.row(f);
    auto dh = d_hidden.row(f);
    for (std::size_t k = 0; k < width; ++k) {
      dq[k] += d_score * hf[k];
      dh[k] = a * d_pooled[k] + d_score * q[k];
    }
  }
  return d_hidden;
}

void CheckCache(const EncoderParams& params, const ForwardCache& cache,
                Branch expected, std::span<const double> grad_embedding) {
  if (cache.branch != expected) {
    throw Error(ErrorCode::kStaleCache, "cache belongs to the other encoder");
  }
  if (cache.params_version != params.version) {
    throw Error(ErrorCode::kStaleCache,
                "parameters changed since the forward pass (version " +
                    std::to_string(cache.params_version) + " vs " +
                    std::to_string(params.version) + ")");
  }
  const std::size_t width = expected == Branch::kMotion
                                ? params.config.model_dim
                                : params.config.word_dim;
  if (cache.hidden.cols() != width || cache.hidden.rows() == 0 ||
      cache.embedding.size() != params.config.joint_dim) {
    throw Error(ErrorCode::kStaleCache, "cache shape does not match params");
  }
  if (grad_embedding.size() != params.config.joint_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding gradient has width " +
                    std::to_string(grad_embedding.size()));
  }
}

}  // namespace

ParamGrads ZerosLike(const EncoderParams& params) {
  ParamGrads g;
  g.config = params.config;
  g.motion = ZeroMotion(params.config);
  g.text = ZeroText(params.config);
  return g;
}

void AddInto(MotionBranch& dst, const MotionBranch& src) {
  AddMatrix(dst.w_embed, src.w_embed);
  AddMatrix(dst.b_embed, src.b_embed);
  AddMatrix(dst.query, src.query);
  AddMatrix(dst.w_proj, src.w_proj);
  AddMatrix(dst.b_proj, src.b_proj);
}

void AddInto(TextBranch& dst, const TextBranch& src) {
  AddMatrix(dst.vocab, src.vocab);
  AddMatrix(dst.query, src.query);
  AddMatrix(dst.w_proj, src.w_proj);
  AddMatrix(dst.b_proj, src.b_proj);
}

void AddInto(ParamGrads& dst, const ParamGrads& src) {
  AddInto(dst.motion, src.motion);
  AddInto(dst.text, src.text);
}

double GlobalNorm(const ParamGrads& grads) {
  double sq = 0.0;
  grads.ForEachTensor([&](std::string_view, const Matrix& m) {
    for (double v : m.values()) sq += v * v;
  });
  return std::sqrt(sq);
}

Vector PositionalEncoding(std::size_t position, std::size_t dim) {
  if (dim % 2 != 0) {
    throw Error(ErrorCode::kOddDimension,
                "positional encoding width " + std::to_string(dim));
  }
  Vector pe(dim);
  const double pos = static_cast<double>(position);
  for (std::size_t k = 0; 2 * k < dim; ++k) {
    const double angle = pos / AngleRate(k, dim);
    pe[2 * k] = std::sin(angle);
    pe[2 * k + 1] = std::cos(angle);
  }
  return pe;
}

EncoderParams InitParams(const EncoderConfig& config, std::uint64_t seed) {
  config.Validate();
  EncoderParams p;
  p.config = config;
  p.motion = ZeroMotion(config);
  p.text = ZeroText(config);

  Rng rng(seed);
  auto fill_uniform = [&rng](Matrix& m, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : m.values()) v = rng.Uniform(-bound, bound);
  };
  fill_uniform(p.motion.w_embed, config.pose_dim);
  fill_uniform(p.motion.query, config.model_dim);
  fill_uniform(p.motion.w_proj, config.model_dim);
  fill_uniform(p.text.vocab, config.word_dim);
  fill_uniform(p.text.query, config.word_dim);
  fill_uniform(p.text.w_proj, config.word_dim);
  return p;
}

void ValidatePose(const EncoderConfig& config, const PoseSequence& motion) {
  const Matrix& m = motion.frames;
  if (m.rows() == 0 || m.rows() > config.max_frames) {
    throw Error(ErrorCode::kDimensionMismatch,
                "motion has " + std::to_string(m.rows()) +
                    " frames, expected 1.." +
                    std::to_string(config.max_frames));
  }
  if (m.cols() != config.pose_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "pose feature width " + std::to_string(m.cols()) +
                    " does not match encoder pose_dim " +
                    std::to_string(config.pose_dim));
  }
  if (!m.all_finite()) {
    throw Error(ErrorCode::kDimensionMismatch, "motion has non-finite values");
  }
}

void ValidateTokens(const EncoderConfig& config, const TokenSequence& text) {
  if (text.tokens.empty() || text.tokens.size() > config.max_tokens) {
    throw Error(ErrorCode::kDimensionMismatch,
                "text has " + std::to_string(text.tokens.size()) +
                    " tokens, expected 1.." +
                    std::to_string(config.max_tokens));
  }
  for (std::size_t id : text.tokens) {
    if (id >= config.vocab_size) {
      throw Error(ErrorCode::kTokenOutOfRange,
                  "token " + std::to_string(id) + " >= vocab_size " +
                      std::to_string(config.vocab_size));
    }
  }
}

ForwardCache EncodeMotion(const EncoderParams& params,
                          const PoseSequence& motion) {
  const EncoderConfig& c = params.config;
  ValidatePose(c, motion);
  ForwardCache cache;
  cache.branch = Branch::kMotion;
  cache.params_version = params.version;
  cache.inputs = motion.frames;

  const std::size_t n = motion.frames.rows();
  const std::size_t width = c.model_dim;
  cache.hidden = Matrix(n, width);
  const Matrix& w = params.motion.w_embed;
  for (std::size_t f = 0; f < n; ++f) {
    auto x = motion.frames.row(f);
    auto hf = cache.hidden.row(f);
    for (std::size_t p = 0; p < c.pose_dim; ++p) {
      const double xp = x[p];
      auto wp = w.row(p);
      for (std::size_t k = 0; k < width; ++k) hf[k] += xp * wp[k];
    }
    const double* pe = PositionRow(f, width);
    for (std::size_t k = 0; k < width; ++k) {
      hf[k] += params.motion.b_embed(0, k);
      hf[k] += pe[k];
    }
  }
  PoolAndProject(params.motion.query, params.motion.w_proj,
                 params.motion.b_proj, cache);
  return cache;
}

ForwardCache EncodeText(const EncoderParams& params,
                        const TokenSequence& text) {
  const EncoderConfig& c = params.config;
  ValidateTokens(c, text);
  ForwardCache cache;
  cache.branch = Branch::kText;
  cache.params_version = params.version;
  cache.tokens = text.tokens;

  const std::size_t n = text.tokens.size();
  const std::size_t width = c.word_dim;
  cache.hidden = Matrix(n, width);
  for (std::size_t f = 0; f < n; ++f) {
    auto e = params.text.vocab.row(text.tokens[f]);
    auto hf = cache.hidden.row(f);
    const double* pe = PositionRow(f, width);
    for (std::size_t k = 0; k < width; ++k) hf[k] = e[k] + pe[k];
  }
  PoolAndProject(params.text.query, params.text.w_proj, params.text.b_proj,
                 cache);
  return cache;
}

MotionBranch MotionBackward(const EncoderParams& params,
                            const ForwardCache& cache,
                            std::span<const double> grad_embedding) {
  CheckCache(params, cache, Branch::kMotion, grad_embedding);
  const EncoderConfig& c = params.config;
  if (cache.inputs.cols() != c.pose_dim) {
    throw Error(ErrorCode::kStaleCache, "cached frames do not match params");
  }
  MotionBranch g = ZeroMotion(c);
  const Matrix d_hidden =
      PoolAndProjectBackward(params.motion.query, params.motion.w_proj, cache,
                             grad_embedding, g.query, g.w_proj, g.b_proj);
  const std::size_t width = c.model_dim;
  for (std::size_t f = 0; f < d_hidden.rows(); ++f) {
    auto dh = d_hidden.row(f);
    auto x = cache.inputs.row(f);
    for (std::size_t p = 0; p < c.pose_dim; ++p) {
      const double xp = x[p];
      auto gp = g.w_embed.row(p);
      for (std::size_t k = 0; k < width; ++k) gp[k] += xp * dh[k];
    }
    for (std::size_t k = 0; k < width; ++k) g.b_embed(0, k) += dh[k];
  }
  return g;
}

TextBranch TextBackward(const EncoderParams& params, const ForwardCache& cache,
                        std::span<const double> grad_embedding) {
  CheckCache(params, cache, Branch::kText, grad_embedding);
  const EncoderConfig& c = params.config;
  TextBranch g = ZeroText(c);
  const Matrix d_hidden =
      PoolAndProjectBackward(params.text.query, params.text.w_proj, cache,
                             grad_embedding, g.query, g.w_proj, g.b_proj);
  for (std::size_t f = 0; f < d_hidden.rows(); ++f) {
    const std::size_t id = cache.tokens[f];
    if (id >= c.vocab_size) {
      throw Error(ErrorCode::kStaleCache, "cached token outside vocabulary");
    }
    auto dh = d_hidden.row(f);
    auto gv = g.vocab.row(id);
    for (std::size_t k = 0; k < c.word_dim; ++k) gv[k] += dh[k];
  }
  return g;
}

ParamGrads EncoderBackward(const EncoderParams& params,
                           const ForwardCache& cache,
                           std::span<const double> grad_embedding) {
  ParamGrads g = ZerosLike(params);
  if (cache.branch == Branch::kMotion) {
    g.motion = MotionBackward(params, cache, grad_embedding);
  } else {
    g.text = TextBackward(params, cache, grad_embedding);
  }
  return g;
}

}  // namespace droptriple
