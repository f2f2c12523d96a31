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

#include "gapfill/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace gapfill {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidInput("matrix data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Vector matvec(const Matrix& m, std::span<const double> v) {
  if (m.cols() != v.size()) {
    throw InvalidInput("matvec: matrix has " + std::to_string(m.cols()) +
                       " columns but vector has length " + std::to_string(v.size()));
  }
  Vector out(m.rows(), 0.0);
  matvec_add(m, v, out);
  return out;
}

void matvec_add(const Matrix& m, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = m.cols();
  const std::size_t rows = m.rows();
  const double* a = m.values().data();
  const double* x = v.data();
  // Four rows at a time for instruction-level parallelism; each row still
  // sums left to right.
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* r0 = a + r * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      s0 += r0[c] * x[c];
      s1 += r1[c] * x[c];
      s2 += r2[c] * x[c];
      s3 += r3[c] * x[c];
    }
    out[r] += s0;
    out[r + 1] += s1;
    out[r + 2] += s2;
    out[r + 3] += s3;
  }
  for (; r < rows; ++r) {
    const double* row = a + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

void sparse_matvec_add(const Matrix& m, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = m.cols();
  const double* a = m.values().data();
  for (std::size_t c = 0; c < cols; ++c) {
    const double x = v[c];
    if (x == 0.0) continue;
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] += a[r * cols + c] * x;
  }
}

void matvec_transpose_add(const Matrix& m, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = m.cols();
  const double* a = m.values().data();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = v[r];
    if (s == 0.0) continue;
    const double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * s;
  }
}

void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
  const std::size_t cols = m.cols();
  double* data = m.values().data();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = a[r];
    if (s == 0.0) continue;
    double* row = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += s * b[c];
  }
}

void sparse_outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
  const std::size_t cols = m.cols();
  double* data = m.values().data();
  for (std::size_t c = 0; c < cols; ++c) {
    const double x = b[c];
    if (x == 0.0) continue;
    for (std::size_t r = 0; r < m.rows(); ++r) data[r * cols + c] += a[r] * x;
  }
}

Vector softmax(std::span<const double> v) {
  Vector out(v.size());
  if (v.empty()) return out;
  const double top = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - top);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

Vector sigmoid(std::span<const double> v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Branch on sign so exp never overflows.
    if (v[i] >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v[i]));
    } else {
      const double e = std::exp(v[i]);
      out[i] = e / (1.0 + e);
    }
  }
  return out;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("log_sum_exp: empty vector");
  const double top = *std::max_element(v.begin(), v.end());
  if (std::isinf(top)) return top;
  double total = 0.0;
  for (double x : v) total += std::exp(x - top);
  return top + std::log(total);
}

double squared_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace gapfill
