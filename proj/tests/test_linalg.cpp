// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "leap/linalg.hpp"

using leap::linalg::Matrix;

namespace {

/// Random orthogonal matrix via Gram-Schmidt.
Matrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix q(n, n);
  for (double& v : q.data()) v = g(rng);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double d = 0;
      for (std::size_t r = 0; r < n; ++r) d += q(r, c) * q(r, p);
      for (std::size_t r = 0; r < n; ++r) q(r, c) -= d * q(r, p);
    }
    double s = 0;
    for (std::size_t r = 0; r < n; ++r) s += q(r, c) * q(r, c);
    for (std::size_t r = 0; r < n; ++r) q(r, c) /= std::sqrt(s);
  }
  return q;
}

}  // namespace

TEST_CASE("matrix arithmetic") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{0, 1}, {1, 0}});
  CHECK(a * b == Matrix::from_rows({{2, 1}, {4, 3}}));
  CHECK(a + b == Matrix::from_rows({{1, 3}, {4, 4}}));
  CHECK(a - b == Matrix::from_rows({{1, 1}, {2, 4}}));
  CHECK(2.0 * a == Matrix::from_rows({{2, 4}, {6, 8}}));
  CHECK(a.transpose() == Matrix::from_rows({{1, 3}, {2, 4}}));
  const std::vector<double> x{1, -1};
  CHECK(leap::linalg::multiply(a, x) == std::vector<double>{-1, -1});
  CHECK(leap::linalg::power(a, 0) == Matrix::identity(2));
  CHECK(leap::linalg::power(a, 3) == a * a * a);
  CHECK(leap::linalg::asymmetry(a) == doctest::Approx(1.0));
}

TEST_CASE("symmetric eigen decomposition reconstructs the matrix") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 5u, 12u}) {
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> spectrum(n);
    for (auto& v : spectrum) v = u(rng);
    const Matrix q = random_orthogonal(n, rng);
    const Matrix a = q * Matrix::diagonal(spectrum) * q.transpose();
    const auto eig = leap::linalg::symmetric_eigen(a);
    std::sort(spectrum.begin(), spectrum.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(eig.values[i] == doctest::Approx(spectrum[i]).epsilon(1e-10));
    const Matrix back = eig.vectors * Matrix::diagonal(eig.values) * eig.vectors.transpose();
    CHECK(leap::linalg::max_abs_diff(back, a) < 1e-10);
  }
}

TEST_CASE("singular values match a constructed U diag V^T") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 3u, 8u}) {
    std::uniform_real_distribution<double> u(0.1, 3.0);
    std::vector<double> sv(n);
    for (auto& v : sv) v = u(rng);
    const Matrix a = random_orthogonal(n, rng) * Matrix::diagonal(sv) * random_orthogonal(n, rng).transpose();
    std::sort(sv.begin(), sv.end(), std::greater<>());
    const auto got = leap::linalg::singular_values(a);
    REQUIRE(got.size() == n);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(got[i] == doctest::Approx(sv[i]).epsilon(1e-9));
      sum += sv[i];
    }
    CHECK(leap::linalg::schatten1(a) == doctest::Approx(sum).epsilon(1e-9));
  }
}

TEST_CASE("schatten-1 of a scalar is its absolute value") {
  CHECK(leap::linalg::schatten1(Matrix::from_rows({{-0.512}})) == doctest::Approx(0.512));
  CHECK(leap::linalg::schatten1(Matrix(3, 3)) == 0.0);
}
