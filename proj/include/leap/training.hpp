// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "leap/common.hpp"
#include "leap/tasks.hpp"
#include "leap/update_rule.hpp"

namespace leap {

/// Loss above this (or non-finite) aborts an inner run with DivergenceError.
inline constexpr double kDivergenceThreshold = 1e12;

/// theta - lr(step) * S * grad. Throws NumericalError on non-finite input or
/// output and LeapError on a dimension mismatch.
ParamVector inner_step(std::span<const double> theta, std::span<const double> grad, const UpdateRule& rule,
                       long step);

/// One segment of a gradient path as seen by a streaming consumer:
/// the pre-update point (params, loss, gradient) and the next baseline point.
struct Segment {
  long step = 0;
  std::span<const double> params;
  double loss = 0.0;
  std::span<const double> grad;
  std::span<const double> next_params;
  double next_loss = 0.0;
};

using SegmentVisitor = std::function<void(const Segment&)>;

struct InnerOptions {
  /// Keep every snapshot and gradient. When false only losses, errors and the
  /// final parameters survive (streaming mode).
  bool store_path = true;
  /// Also record the loss on the task's whole dataset at every snapshot.
  bool record_full_loss = false;
};

/// Recorded baseline Psi = {psi^0 .. psi^K}. losses[i] is the minibatch loss
/// at psi^i, evaluated on the batch whose gradient is grads[i]; losses[K] is
/// measured at the final point on one more batch.
struct GradientPath {
  std::vector<ParamVector> params;  // K + 1 snapshots (empty when streamed)
  std::vector<ParamVector> grads;   // K (empty when streamed)
  std::vector<double> losses;       // K + 1
  std::vector<double> errors;       // K + 1; 0/1 error for classification, loss otherwise
  std::vector<double> full_losses;  // K + 1 when requested
  ParamVector final_params;

  std::size_t steps() const { return losses.empty() ? 0 : losses.size() - 1; }
  bool streamed() const { return params.empty(); }
  double final_loss() const { return losses.back(); }
};

/// Runs the task's update rule for its step budget from `theta0`. The minibatch
/// stream is seeded by `stream_seed`. `visit` (optional) sees each segment as
/// soon as the next point's loss is known.
GradientPath run_inner_training(const Task& task, std::span<const double> theta0, std::uint64_t stream_seed,
                                const InnerOptions& options = {}, const SegmentVisitor& visit = {});

/// Largest |psi^{i+1} - (psi^i - lr_i S grad_i)| over the path.
double replay_error(const GradientPath& path, const UpdateRule& rule);

/// Writes step,loss,grad_norm,param_norm rows (one per snapshot; the final row
/// has an empty grad_norm).
void write_path_trace(std::ostream& out, const GradientPath& path);

}  // namespace leap
