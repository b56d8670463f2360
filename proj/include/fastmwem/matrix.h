//
// Copyright 2026 The Fast-MWEM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FASTMWEM_MATRIX_H_
#define FASTMWEM_MATRIX_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fastmwem {

// Dense row-major matrix of doubles. Rows are the unit of access everywhere
// in this library (queries, constraints, index vectors).
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(size_t rows, size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("Matrix: data size does not match shape");
    }
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(size_t i) { return {data_.data() + i * cols_, cols_}; }

  double operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// Four independent accumulators let the compiler vectorize without
// reassociation flags; summation order is fixed, so results are reproducible.
inline double Dot(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double SquaredNorm(std::span<const double> a) { return Dot(a, a); }

}  // namespace fastmwem

#endif  // FASTMWEM_MATRIX_H_
