// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace leap::linalg {

/// Dense row-major matrix for the small systems used by the oracles
/// (quadratic Hessians, Jacobian chains). Not intended for large n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transpose() const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend Matrix operator*(double s, const Matrix& a);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> multiply(const Matrix& a, std::span<const double> x);

/// Largest absolute asymmetry |a_ij - a_ji|.
double asymmetry(const Matrix& a);

double max_abs_diff(const Matrix& a, const Matrix& b);

/// Integer power by repeated squaring.
Matrix power(const Matrix& a, unsigned k);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Throws NumericalError if
/// the off-diagonal mass does not vanish within `max_sweeps`.
SymmetricEigen symmetric_eigen(const Matrix& a, int max_sweeps = 100);

/// Singular values (descending) from the eigenvalues of AᵀA.
std::vector<double> singular_values(const Matrix& a);

/// Sum of singular values.
double schatten1(const Matrix& a);

}  // namespace leap::linalg
