// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "leap/geometry.hpp"
#include "leap/linalg.hpp"
#include "leap/meta.hpp"
#include "leap/tasks.hpp"

namespace leap::verify {

// ---------------------------------------------------------------------------
// Finite-difference oracles
// ---------------------------------------------------------------------------

/// Central-difference gradient of |(next - theta, next_loss - f(theta))|^p
/// w.r.t. theta with the forward point frozen; f is the task loss on `batch`.
/// Requires h in [1e-8, 1e-4].
ParamVector fd_segment_gradient(const Task& task, std::span<const double> params, const DataBatch& batch,
                                std::span<const double> next_params, double next_loss, const GeometryConfig& cfg,
                                double h = 1e-6);

/// Central-difference gradient of the task loss on `batch`.
ParamVector fd_loss_gradient(const Task& task, std::span<const double> params, const DataBatch& batch,
                             double h = 1e-6);

/// |a - b| / max(|a|, |b|), with 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Jacobian of the inner trajectory w.r.t. the initialization
// ---------------------------------------------------------------------------

struct JacobianChain {
  linalg::Matrix jacobian;
  long step = 0;
};

/// Hessian of the task loss on the full dataset: exact for quadratics,
/// central differences of the analytic gradient otherwise (n <= 50).
linalg::Matrix task_hessian(const Task& task, std::span<const double> params, double h = 1e-5);

/// J^{i+1} = (I - lr_i S H(theta^i)) J^i along a full-batch run of `steps`
/// steps from theta0. Element i of the result is J^i (element 0 is I).
std::vector<JacobianChain> jacobian_trace(const Task& task, std::span<const double> theta0, int steps);

/// Last element of jacobian_trace.
JacobianChain jacobian_chain(const Task& task, std::span<const double> theta0, int steps);

/// Relative precision of the identity approximation:
/// schatten1(I - J) / schatten1(J).
double jacobian_precision(const linalg::Matrix& jacobian);

// ---------------------------------------------------------------------------
// Pareto oracle and feasibility
// ---------------------------------------------------------------------------

struct Grid {
  ParamVector lower;
  ParamVector upper;
  double resolution = 0.01;
};

struct ParetoResult {
  ParamVector argmin;
  double total_distance = 0.0;
  std::size_t points = 0;
};

/// Brute-force minimizer of the summed path distance over a bounded grid
/// (n <= 3). Inner trainings run in full-batch mode.
ParetoResult pareto_oracle(const std::vector<Task>& tasks, const Grid& grid, const GeometryConfig& geometry,
                           int threads = 1);

/// Summed path distance over tasks from theta0 (full batch).
double total_path_distance(const std::vector<Task>& tasks, std::span<const double> theta0,
                           const GeometryConfig& geometry);

/// Final full-dataset loss after full-batch inner training from theta0.
double final_task_loss(const Task& task, std::span<const double> theta0);

/// Per task: final loss from `theta_new` <= final loss from `theta_old` + tol.
std::vector<bool> feasibility_check(std::span<const double> theta_new, std::span<const double> theta_old,
                                    const std::vector<Task>& tasks, double tolerance = 1e-9);

// ---------------------------------------------------------------------------
// Ablation over (p, stabilizer, loss dimension)
// ---------------------------------------------------------------------------

struct AblationCell {
  int p = 2;
  bool stabilize = false;
  bool include_loss = false;
  std::vector<double> mean_loss;  // per meta step, averaged over surviving seeds
  double auc = 0.0;               // area under mean_loss (not scaled)
  std::vector<ParamVector> final_params;  // one per seed, empty if diverged
  std::vector<std::vector<double>> histories;  // per seed, possibly truncated
  std::vector<std::uint64_t> diverged;

  std::string label() const;
};

struct AblationResult {
  std::vector<AblationCell> cells;  // 8 cells, p-major order
  std::vector<std::uint64_t> seeds;
};

/// Runs Leap under every combination of p in {1, 2}, stabilizer and loss
/// dimension. theta0 for each seed comes from initial_parameters on the first
/// task with an Rng seeded by the seed. Needs at least 3 seeds. A seed whose
/// meta run fails numerically is listed in `diverged` and its history stops
/// at the failure.
AblationResult run_ablation(const TaskDistribution& dist, const MetaConfig& base, const std::vector<std::uint64_t>& seeds);

/// First meta step at which the trailing `window`-step mean of `history`
/// drops to `threshold` or below; -1 if never.
long steps_to_threshold(std::span<const double> history, double threshold, int window = 1);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::vector<std::uint64_t> seeds;
};

struct Report {
  std::string suite;
  std::vector<CheckResult> checks;
  /// Free-form extra payload (JSON text), e.g. ablation histories.
  std::string extra_json;

  bool passed() const;
  std::string to_json() const;
};

inline const std::array<std::string, 5> kSuites = {"gradients", "theorem1", "jacobian", "ablation",
                                                   "reptile_reduction"};

/// Throws ConfigError for an unknown suite name.
Report run_suite(const std::string& name, int threads = 1);

Report gradients_suite();
Report theorem1_suite();
Report jacobian_suite();
Report ablation_suite(int threads = 1);
Report reptile_reduction_suite();

/// Batches of deterministic quadratics used by the theorem1 checks: `tasks`
/// tasks of dimension `dim` sharing one random SPD Hessian with spectrum in
/// [0.5, 1], centers uniform in [-1, 1]^dim, step size 1/lambda_max.
std::vector<Task> shared_curvature_batch(int dim, int tasks, int steps, std::uint64_t seed);

struct Theorem1Outcome {
  double max_increase = 0.0;       // largest single-step rise of batch-mean distance
  double total_decrease = 0.0;     // first minus last batch-mean distance
  double worst_feasibility = 0.0;  // max over steps and tasks of new - old final loss
  bool feasible = true;
  std::vector<double> distances;   // before each meta step and after the last
};

/// Runs `meta_steps` Leap steps on a fixed batch (every task every step) and
/// tracks batch-mean distance and per-task feasibility between steps.
Theorem1Outcome theorem1_run(const std::vector<Task>& batch, const MetaConfig& cfg, ParamVector theta0);

}  // namespace leap::verify
