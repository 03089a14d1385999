// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace leap {

struct ConstantSchedule {
  double lr = 0.01;
};

/// lr(i) = lr_max * (1 + cos(pi * i / period)) / 2 for i <= period, 0 after.
struct CosineSchedule {
  double lr_max = 0.01;
  int period = 100;
};

using Schedule = std::variant<ConstantSchedule, CosineSchedule>;

struct IdentityPreconditioner {};

struct DiagonalPreconditioner {
  std::vector<double> diag;
};

using Preconditioner = std::variant<IdentityPreconditioner, DiagonalPreconditioner>;

/// Inner-loop update rule: theta <- theta - lr(i) * S * grad.
struct UpdateRule {
  Schedule schedule = ConstantSchedule{};
  Preconditioner preconditioner = IdentityPreconditioner{};

  static UpdateRule constant(double lr) { return UpdateRule{ConstantSchedule{lr}, IdentityPreconditioner{}}; }

  double learning_rate(long step) const;

  /// Multiplier applied to coordinate `j` (the diagonal of S).
  double scale(std::size_t j) const {
    if (const auto* d = std::get_if<DiagonalPreconditioner>(&preconditioner)) return d->diag[j];
    return 1.0;
  }

  /// Throws ConfigError on non-positive rates or diagonal entries, or when a
  /// diagonal preconditioner does not match `dim` (skipped when dim == 0).
  void validate(std::size_t dim = 0) const;
};

}  // namespace leap
