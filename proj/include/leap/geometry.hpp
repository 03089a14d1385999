// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "leap/common.hpp"
#include "leap/training.hpp"

namespace leap {

/// A point (theta, f(theta)) on a task's loss surface.
struct ManifoldPoint {
  std::span<const double> params;
  double loss = 0.0;
};

enum class DistanceKind : int { length = 1, energy = 2 };

struct GeometryConfig {
  DistanceKind kind = DistanceKind::length;
  /// Treat the loss as an extra coordinate of the manifold.
  bool include_loss = true;
  /// Replace loss increments by -|delta f| in the meta-gradient.
  bool stabilize = true;
  /// p = 1 segments shorter than this contribute a zero increment.
  double zero_norm_eps = 1e-12;

  int p() const { return static_cast<int>(kind); }
  void validate() const;
};

/// Euclidean norm of (b - a) over parameters, plus the loss coordinate when
/// `include_loss`.
double segment_norm(const ManifoldPoint& a, const ManifoldPoint& b, bool include_loss);

/// Cumulative chordal distance: sum of segment norms raised to p. Needs a
/// stored (non-streamed) path.
double path_distance(const GradientPath& path, const GeometryConfig& cfg);

/// Per-segment contribution to the meta-gradient with the forward point frozen
/// and the Jacobian of the current point w.r.t. the initialization taken as
/// the identity:
///   -p * |segment|^(p-2) * (delta_f * grad + delta_theta)
/// delta_f becomes -|delta_f| under the stabilizer and is dropped (together
/// with its share of the segment norm) when the loss is excluded.
ParamVector pull_forward_increment(std::span<const double> params, double loss, std::span<const double> grad,
                                   std::span<const double> next_params, double next_loss, const GeometryConfig& cfg);

/// In-place form used by the streaming accumulator: accum += increment.
void add_pull_forward_increment(std::span<double> accum, std::span<const double> params, double loss,
                                std::span<const double> grad, std::span<const double> next_params, double next_loss,
                                const GeometryConfig& cfg);

/// Stabilizer penalty: 0 when the step descends, -2 (f_next - f)^2 otherwise.
double stabilizer_value(double loss, double next_loss);

/// Consumes segments from run_inner_training and keeps the running
/// meta-gradient and path distance, so no path needs to be stored.
class PullForwardAccumulator {
 public:
  PullForwardAccumulator(std::size_t dim, GeometryConfig cfg) : grad_(dim, 0.0), cfg_(cfg) {}

  void operator()(const Segment& s);
  SegmentVisitor visitor() {
    return [this](const Segment& s) { (*this)(s); };
  }

  const ParamVector& gradient() const { return grad_; }
  double distance() const { return distance_; }

 private:
  ParamVector grad_;
  double distance_ = 0.0;
  GeometryConfig cfg_;
};

}  // namespace leap
