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

#include "droptriple/numeric.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "droptriple/error.hpp"
#include "droptriple/kernels.hpp"

namespace droptriple {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged matrix literal");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::FromRows(const std::vector<Vector>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged row list");
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

Vector L2Normalize(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::kZeroVector, "empty vector");
  const double n = Norm(v);
  if (!(n >= 1e-12)) {
    throw Error(ErrorCode::kZeroVector,
                "cannot normalize vector with norm " + std::to_string(n));
  }
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

Matrix NormalizeRows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Vector u = L2Normalize(m.row(r));
    std::copy(u.begin(), u.end(), out.row(r).begin());
  }
  return out;
}

namespace {

void CheckUnitRows(const Matrix& m, const char* name) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = Norm(m.row(r));
    if (std::abs(n - 1.0) > 1e-9) {
      throw Error(ErrorCode::kNonUnitRows,
                  std::string(name) + " row " + std::to_string(r) +
                      " has norm " + std::to_string(n));
    }
  }
}

}  // namespace

Matrix InnerProducts(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "inner products of width " + std::to_string(a.cols()) +
                    " and " + std::to_string(b.cols()));
  }
  return kernels::parallel::Gram(a, b);
}

Matrix CosineSimMatrix(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding widths " + std::to_string(a.cols()) + " and " +
                    std::to_string(b.cols()));
  }
  CheckUnitRows(a, "A");
  CheckUnitRows(b, "B");
  return kernels::parallel::Gram(a, b);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::NextU64() { return engine_(); }

double Rng::NextUnit() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double Rng::Uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kInvalidRange, "uniform range [" +
                                              std::to_string(lo) + ", " +
                                              std::to_string(hi) + ")");
  }
  const double x = lo + (hi - lo) * NextUnit();
  return x < hi ? x : std::nextafter(hi, lo);
}

double Rng::Gaussian(double mean, double sigma) {
  if (!(sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidRange,
                "gaussian sigma " + std::to_string(sigma));
  }
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - NextUnit();
  const double u2 = NextUnit();
  if (sigma == 0.0) return mean;
  const double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * std::numbers::pi * u2);
  return mean + sigma * z;
}

std::size_t Rng::UniformIndex(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidRange, "index range is empty");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::string Rng::SerializeState() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::FromState(std::uint64_t seed, std::string_view state) {
  Rng rng(seed);
  std::istringstream is{std::string(state)};
  is >> rng.engine_;
  if (!is) throw Error(ErrorCode::kCorruptRecord, "bad generator state");
  return rng;
}

std::uint64_t Fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t hash) {
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view component) {
  const auto* p = reinterpret_cast<const unsigned char*>(component.data());
  std::uint64_t z = seed ^ Fnv1a64({p, component.size()});
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace droptriple
