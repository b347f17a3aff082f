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

// Independent reference computations for the tests. Nothing here calls the
// library's math; everything is spelled out with plain loops on nested
// vectors so a shared bug cannot hide on both sides.
#ifndef DROPTRIPLE_TESTS_ORACLES_HPP_
#define DROPTRIPLE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "droptriple/encoder.hpp"
#include "droptriple/loss.hpp"
#include "droptriple/numeric.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows ToRows(const droptriple::Matrix& m) {
  Rows r(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

inline double Cos(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double Hinge(double x) { return x > 0.0 ? x : 0.0; }

// Cosines of unit vectors are in [-1, 1]; rounding can push them a hair
// outside, which matters only when a threshold sits exactly at 1.
inline double Clamp(double x) { return std::min(1.0, std::max(-1.0, x)); }

// Triple-loop loss straight from the definitions. For anchor i the motion
// anchor m_i retrieves texts t_j, the text anchor t_i retrieves motions
// m_j. A text negative t_j is pruned when cos(t_i, t_j) > hetero or
// cos(m_i, m_j) > homo; a motion negative m_j when cos(m_i, m_j) > hetero
// or cos(t_i, t_j) > homo.
inline double NaiveLoss(droptriple::LossKind kind, const Rows& m, const Rows& t,
                        double alpha, double hetero, double homo) {
  const std::size_t n = m.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = Cos(m[i], t[i]);
    double sum_t = 0.0, sum_m = 0.0, max_t = 0.0, max_m = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double ht = Hinge(alpha - pos + Cos(m[i], t[j]));
      const double hm = Hinge(alpha - pos + Cos(m[j], t[i]));
      sum_t += ht;
      sum_m += hm;
      const double smm = Clamp(Cos(m[i], m[j]));
      const double stt = Clamp(Cos(t[i], t[j]));
      bool keep_t = true, keep_m = true;
      if (kind == droptriple::LossKind::kDropTriple) {
        keep_t = !(stt > hetero || smm > homo);
        keep_m = !(smm > hetero || stt > homo);
      }
      if (keep_t) max_t = std::max(max_t, ht);
      if (keep_m) max_m = std::max(max_m, hm);
    }
    total += kind == droptriple::LossKind::kSumOfHinges ? sum_t + sum_m
                                                        : max_t + max_m;
  }
  return total;
}

inline std::vector<double> Softmax(const std::vector<double>& x) {
  double hi = x[0];
  for (double v : x) hi = std::max(hi, v);
  std::vector<double> e(x.size());
  double z = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) z += (e[k] = std::exp(x[k] - hi));
  for (double& v : e) v /= z;
  return e;
}

inline double Pe(std::size_t position, std::size_t index, std::size_t dim) {
  const double pair = static_cast<double>(index - index % 2);
  const double angle = static_cast<double>(position) /
                       std::pow(10000.0, pair / static_cast<double>(dim));
  return index % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

// Attention pooling of per-element hidden rows followed by projection and
// normalization.
inline std::vector<double> PoolProjectNormalize(const Rows& hidden,
                                                const droptriple::Matrix& query,
                                                const droptriple::Matrix& w_proj,
                                                const droptriple::Matrix& b_proj) {
  const std::size_t width = hidden[0].size();
  std::vector<double> scores;
  for (const auto& h : hidden) {
    double s = 0.0;
    for (std::size_t k = 0; k < width; ++k) s += query(0, k) * h[k];
    scores.push_back(s / std::sqrt(static_cast<double>(width)));
  }
  const auto w = Softmax(scores);
  std::vector<double> pooled(width, 0.0);
  for (std::size_t f = 0; f < hidden.size(); ++f)
    for (std::size_t k = 0; k < width; ++k) pooled[k] += w[f] * hidden[f][k];
  std::vector<double> z(w_proj.cols());
  for (std::size_t c = 0; c < z.size(); ++c) {
    z[c] = b_proj(0, c);
    for (std::size_t k = 0; k < width; ++k) z[c] += w_proj(k, c) * pooled[k];
  }
  double norm = 0.0;
  for (double v : z) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : z) v /= norm;
  return z;
}

inline std::vector<double> EncodeMotion(const droptriple::EncoderParams& p,
                                        const droptriple::Matrix& frames) {
  const auto& b = p.motion;
  const std::size_t width = b.w_embed.cols();
  Rows hidden(frames.rows(), std::vector<double>(width));
  for (std::size_t f = 0; f < frames.rows(); ++f)
    for (std::size_t c = 0; c < width; ++c) {
      double v = b.b_embed(0, c) + Pe(f, c, width);
      for (std::size_t k = 0; k < frames.cols(); ++k) v += b.w_embed(k, c) * frames(f, k);
      hidden[f][c] = v;
    }
  return PoolProjectNormalize(hidden, b.query, b.w_proj, b.b_proj);
}

inline std::vector<double> EncodeText(const droptriple::EncoderParams& p,
                                      const std::vector<std::size_t>& tokens) {
  const auto& b = p.text;
  const std::size_t width = b.vocab.cols();
  Rows hidden(tokens.size(), std::vector<double>(width));
  for (std::size_t n = 0; n < tokens.size(); ++n)
    for (std::size_t c = 0; c < width; ++c)
      hidden[n][c] = b.vocab(tokens[n], c) + Pe(n, c, width);
  return PoolProjectNormalize(hidden, b.query, b.w_proj, b.b_proj);
}

// Rows drawn from a Gaussian and normalized by hand.
inline droptriple::Matrix RandomUnitRows(droptriple::Rng& rng, std::size_t rows,
                                         std::size_t cols) {
  droptriple::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      m(i, j) = rng.Gaussian(0.0, 1.0);
      norm += m(i, j) * m(i, j);
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < cols; ++j) m(i, j) /= norm;
  }
  return m;
}

}  // namespace oracle

#endif  // DROPTRIPLE_TESTS_ORACLES_HPP_
