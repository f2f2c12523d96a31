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


#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gapfill/numerics.hpp"

using gapfill::InvalidInput;
using gapfill::Matrix;
using gapfill::Vector;

TEST_CASE("matvec examples") {
  CHECK(gapfill::matvec(Matrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
  CHECK(gapfill::matvec(Matrix(2, 3), Vector{5, 5, 5}) == Vector{0, 0});
  CHECK(gapfill::matvec(Matrix(2, 2, {1, 2, 3, 4}), Vector{1, 1}) == Vector{3, 7});
  CHECK_THROWS_AS(gapfill::matvec(Matrix(2, 3), Vector{1, 2}), InvalidInput);
}

TEST_CASE("matvec distributes over vector addition") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + gen() % 7, cols = 1 + gen() % 7;
    Matrix m(rows, cols);
    for (double& v : m.values()) v = u(gen);
    Vector a(cols), b(cols), sum(cols);
    for (std::size_t i = 0; i < cols; ++i) {
      a[i] = u(gen);
      b[i] = u(gen);
      sum[i] = a[i] + b[i];
    }
    const Vector lhs = gapfill::matvec(m, sum);
    const Vector ra = gapfill::matvec(m, a), rb = gapfill::matvec(m, b);
    for (std::size_t r = 0; r < rows; ++r) CHECK(lhs[r] == doctest::Approx(ra[r] + rb[r]).epsilon(1e-12));
  }
}

TEST_CASE("blocked matvec agrees with a row-by-row sum exactly") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t rows : {1, 3, 4, 5, 9}) {
    Matrix m(rows, 6);
    for (double& v : m.values()) v = u(gen);
    Vector x(6);
    for (double& v : x) v = u(gen);
    Vector out(rows, 0.5);
    gapfill::matvec_add(m, x, out);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < 6; ++c) acc += m(r, c) * x[c];
      CHECK(out[r] == 0.5 + acc);
    }
  }
}

TEST_CASE("sparse and transposed products match dense ones") {
  Matrix m(3, 4, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  Vector dense(3, 0.0), sparse(3, 0.0);
  const Vector x{0, 2, 0, -1};
  gapfill::matvec_add(m, x, dense);
  gapfill::sparse_matvec_add(m, x, sparse);
  CHECK(dense == sparse);
  Vector t(4, 0.0);
  gapfill::matvec_transpose_add(m, Vector{1, 0, 2}, t);
  CHECK(t == Vector{19, 22, 25, 28});
  Matrix o(3, 4), so(3, 4);
  gapfill::outer_add(o, Vector{1, 2, 0}, x);
  gapfill::sparse_outer_add(so, Vector{1, 2, 0}, x);
  CHECK(o == so);
  CHECK(o(1, 1) == 4.0);
  CHECK(o(1, 3) == -2.0);
}

TEST_CASE("softmax examples and invariants") {
  const Vector half = gapfill::softmax(Vector{0, 0});
  CHECK(half[0] == doctest::Approx(0.5));
  const Vector two = gapfill::softmax(Vector{std::log(2.0), 0});
  CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  for (double v : gapfill::softmax(Vector{1000, 1000, 1000})) CHECK(v == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1000, 1000);
  for (int trial = 0; trial < 100; ++trial) {
    Vector v(1 + gen() % 9);
    for (double& x : v) x = u(gen);
    const Vector p = gapfill::softmax(v);
    double total = 0.0;
    for (double x : p) total += x;
    CHECK(std::abs(total - 1.0) < 1e-12);
    const double shift = u(gen);
    Vector shifted = v;
    for (double& x : shifted) x += shift;
    const Vector q = gapfill::softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
  }
}

TEST_CASE("sigmoid examples") {
  CHECK(gapfill::sigmoid(Vector{0})[0] == 0.5);
  CHECK(std::abs(gapfill::sigmoid(Vector{50})[0] - 1.0) < 1e-12);
  CHECK(gapfill::sigmoid(Vector{-std::log(3.0)})[0] == doctest::Approx(0.25).epsilon(1e-14));
  const double tiny = gapfill::sigmoid(Vector{-800})[0];
  CHECK(tiny >= 0.0);
  CHECK(std::isfinite(tiny));
}

TEST_CASE("log_sum_exp examples and bounds") {
  CHECK(gapfill::log_sum_exp(Vector{0, 0}) == doctest::Approx(std::log(2.0)));
  CHECK(gapfill::log_sum_exp(Vector{1000, 1000}) == doctest::Approx(1000 + std::log(2.0)));
  CHECK(gapfill::log_sum_exp(Vector{-3.25}) == -3.25);
  CHECK_THROWS_AS(gapfill::log_sum_exp(Vector{}), InvalidInput);
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(gapfill::log_sum_exp(Vector{ninf, ninf}) == ninf);

  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 100; ++trial) {
    Vector v(1 + gen() % 8);
    for (double& x : v) x = u(gen);
    const double top = *std::max_element(v.begin(), v.end());
    const double lse = gapfill::log_sum_exp(v);
    CHECK(lse >= top);
    CHECK(lse <= top + std::log(static_cast<double>(v.size())) + 1e-12);
  }
}

TEST_CASE("helpers") {
  CHECK(gapfill::argmax(Vector{0.1, 0.7, 0.2}) == 1);
  CHECK(gapfill::squared_norm(Vector{3, 4}) == 25.0);
  CHECK(gapfill::all_finite(Vector{1, 2}));
  CHECK_FALSE(gapfill::all_finite(Vector{1, std::nan("")}));
}
