// Copyright 2026 The Gapfill Authors.
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

#ifndef GAPFILL_NUMERICS_HPP_
#define GAPFILL_NUMERICS_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gapfill {

// Raised for inputs that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// m · v. Throws InvalidInput when m.cols() != v.size().
Vector matvec(const Matrix& m, std::span<const double> v);

// out += m · v, summing each row left to right.
void matvec_add(const Matrix& m, std::span<const double> v, std::span<double> out);

// out += m · v, visiting only the nonzero entries of v (column by column).
// Used for input projections, where v is usually one-hot or binary.
void sparse_matvec_add(const Matrix& m, std::span<const double> v, std::span<double> out);

// out += mᵀ · v.
void matvec_transpose_add(const Matrix& m, std::span<const double> v, std::span<double> out);

// m += a · bᵀ.
void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b);

// m += a · bᵀ, visiting only the nonzero entries of b.
void sparse_outer_add(Matrix& m, std::span<const double> a, std::span<const double> b);

Vector softmax(std::span<const double> v);
Vector sigmoid(std::span<const double> v);

// log Σ exp(v_i); throws InvalidInput on an empty vector.
double log_sum_exp(std::span<const double> v);

// Sum of squares, left to right.
double squared_norm(std::span<const double> v);

bool all_finite(std::span<const double> v);

std::size_t argmax(std::span<const double> v);

}  // namespace gapfill

#endif  // GAPFILL_NUMERICS_HPP_
