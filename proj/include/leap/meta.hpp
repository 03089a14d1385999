// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "leap/common.hpp"
#include "leap/geometry.hpp"
#include "leap/tasks.hpp"
#include "leap/training.hpp"

namespace leap {

struct SgdMeta {};

struct AdamMeta {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using MetaOptimizer = std::variant<SgdMeta, AdamMeta>;

enum class MetaMethod { leap, reptile, fomaml, finetune, none };

std::string_view to_string(MetaMethod m);
MetaMethod parse_meta_method(std::string_view name);

struct MetaConfig {
  GeometryConfig geometry;
  /// Meta step size (SGD meta optimizer).
  double beta = 0.1;
  int batch_size = 5;
  int meta_steps = 100;
  MetaOptimizer optimizer = SgdMeta{};
  /// Reptile interpolation factor and FOMAML learning rate for the baselines.
  double reptile_epsilon = 0.2;
  double fomaml_lr = 0.1;
  /// Stop once the meta-gradient norm falls below this (0 disables).
  double early_stop_grad_norm = 0.0;
  /// Inner trainings keep no path; meta-gradients are accumulated on the fly.
  bool streaming = true;
  int threads = 1;
  /// Keep a copy of theta0 every N meta steps (0 disables).
  int snapshot_every = 0;

  void validate() const;
};

struct MetaState {
  ParamVector theta0;
  ParamVector accum;  // meta-gradient of the last step
  long step = 0;
  ParamVector first_moment;
  ParamVector second_moment;

  static MetaState initial(ParamVector theta0);
};

struct MetaStepRecord {
  long step = 0;
  /// Batch means over surviving tasks.
  double mean_distance = 0.0;
  double mean_loss = 0.0;   // average loss along each inner path
  double final_loss = 0.0;  // loss at the end of each inner path
  double mean_error = 0.0;  // average training error along each inner path
  double grad_norm = 0.0;   // |accum / |B||
  std::vector<std::string> dropped;
};

struct MetaStepResult {
  MetaState state;
  MetaStepRecord record;
};

/// One iteration of the Leap outer loop: inner training from theta0 on each
/// task, streaming pull-forward increments into the meta-gradient, then an
/// update of theta0 by the configured meta optimizer on accum / |B|.
/// Diverged tasks are dropped (listed in record.dropped); throws
/// NumericalError if none survive.
MetaStepResult leap_meta_step(const MetaState& state, const std::vector<Task>& batch, const MetaConfig& cfg,
                              std::uint64_t seed);

/// theta0 <- theta0 + epsilon * mean_tau(theta^K_tau - theta0).
MetaStepResult reptile_meta_step(const MetaState& state, const std::vector<Task>& batch, double epsilon,
                                 const MetaConfig& cfg, std::uint64_t seed);

/// theta0 <- theta0 - lr * mean_tau grad f_tau(theta^K_tau), with the final
/// gradient taken on a fresh (held-out) batch.
MetaStepResult fomaml_meta_step(const MetaState& state, const std::vector<Task>& batch, double lr,
                                const MetaConfig& cfg, std::uint64_t seed);

/// Multi-task SGD on a single shared parameter vector: every inner step
/// visits each task of the batch in turn.
MetaStepResult finetune_meta_step(const MetaState& state, const std::vector<Task>& batch, const MetaConfig& cfg,
                                  std::uint64_t seed);

struct MetaRun {
  ParamVector theta0;
  std::vector<MetaStepRecord> history;
  std::vector<std::pair<long, ParamVector>> snapshots;
};

/// Outer loop for any method: sample a batch per meta step, apply the
/// method's step. `none` returns theta0 untouched with an empty history.
MetaRun run_meta(MetaMethod method, const TaskDistribution& dist, const MetaConfig& cfg, ParamVector theta0,
                 std::uint64_t seed);

inline MetaRun run_leap(const TaskDistribution& dist, const MetaConfig& cfg, ParamVector theta0, std::uint64_t seed) {
  return run_meta(MetaMethod::leap, dist, cfg, std::move(theta0), seed);
}

// ---------------------------------------------------------------------------
// Transfer evaluation
// ---------------------------------------------------------------------------

/// Trapezoidal area under the per-step error curve divided by (n - 1);
/// multiplied by 100 when `percent`. A single point yields that point.
double area_under_curve(std::span<const double> errors, bool percent);

struct TransferRecord {
  std::size_t task_index = 0;
  std::vector<double> losses;  // eval_steps + 1
  std::vector<double> errors;  // eval_steps + 1
  double auc = 0.0;
  double final_loss = 0.0;
  double final_error = 0.0;
  bool diverged = false;
  std::string message;
};

/// Trains from theta0 for `eval_steps` steps on each held-out task and scores
/// the training-error curve. Divergence is recorded rather than thrown.
std::vector<TransferRecord> evaluate_transfer(std::span<const double> theta0, const std::vector<Task>& heldout,
                                              int eval_steps, std::uint64_t seed, int threads = 1);

double mean_auc(const std::vector<TransferRecord>& records);

}  // namespace leap
