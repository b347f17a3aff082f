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

#ifndef DROPTRIPLE_NUMERIC_HPP_
#define DROPTRIPLE_NUMERIC_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace droptriple {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Row vectors (biases, pooling queries)
// are stored as 1 x n matrices so every parameter tensor has one type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix FromRows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double value);
  Matrix transpose() const;
  bool all_finite() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Left-to-right accumulation; the order is part of the reproducibility
// contract.
double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> v);

// Throws ZeroVector when the norm is below 1e-12.
Vector L2Normalize(std::span<const double> v);

// Row-wise L2Normalize.
Matrix NormalizeRows(const Matrix& m);

// S(i, j) = <A_i, B_j> for unit-norm rows. Throws DimensionMismatch when the
// column counts differ and NonUnitRows when any row norm is off by > 1e-9.
Matrix CosineSimMatrix(const Matrix& a, const Matrix& b);

// Unchecked A * B^T, same summation order as CosineSimMatrix.
Matrix InnerProducts(const Matrix& a, const Matrix& b);

// Deterministic generator: the standard mt19937_64 engine (its output
// sequence is fixed by the C++ standard) with hand-written conversions to
// doubles, so streams are identical on every conforming platform.
//   uniform:  lo + (hi - lo) * (x >> 11) * 2^-53
//   gaussian: Box-Muller on two uniforms, cosine branch only
//   index:    rejection sampling on the raw 64-bit output
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t NextU64();
  // [0, 1)
  double NextUnit();
  // [lo, hi); InvalidRange unless lo < hi.
  double Uniform(double lo, double hi);
  // InvalidRange if sigma < 0. sigma == 0 returns mean exactly.
  double Gaussian(double mean, double sigma);
  // Uniform integer in [0, n); InvalidRange if n == 0.
  std::size_t UniformIndex(std::size_t n);

  std::string SerializeState() const;
  static Rng FromState(std::uint64_t seed, std::string_view state);

  bool operator==(const Rng& other) const {
    return seed_ == other.seed_ && engine_ == other.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer over (seed, FNV-1a(component)). Used to split one
// top-level seed into independent per-component streams.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view component);

std::uint64_t Fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace droptriple

#endif  // DROPTRIPLE_NUMERIC_HPP_
