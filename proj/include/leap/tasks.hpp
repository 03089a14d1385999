// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "leap/common.hpp"
#include "leap/linalg.hpp"
#include "leap/update_rule.hpp"

namespace leap {

using Rng = std::mt19937_64;

enum class TaskFamily { quadratic, sinusoid_mlp, synth_classify };

std::string_view to_string(TaskFamily f);
/// Throws ConfigError naming the unknown value.
TaskFamily parse_task_family(std::string_view name);

/// f(theta) = 1/2 (theta - c)^T A (theta - c) with A symmetric positive-definite.
struct QuadraticSpec {
  linalg::Matrix hessian;
  ParamVector center;

  std::size_t dim() const { return center.size(); }
  void validate() const;
};

/// Single-hidden-layer tanh network.
struct MlpShape {
  int inputs = 1;
  int hidden = 40;
  int outputs = 1;

  std::size_t param_count() const {
    return static_cast<std::size_t>(hidden * inputs + hidden + outputs * hidden + outputs);
  }
  void validate() const;
};

/// Regression onto y = amplitude * sin(x - phase) + noise, x ~ U[-5, 5].
struct SinusoidSpec {
  double amplitude = 1.0;
  double phase = 0.0;
  MlpShape model{1, 40, 1};
  double noise_std = 0.0;
  int dataset_size = 200;

  void validate() const;
};

/// Two Gaussian blobs in the plane, means at offset +- separation/2 along
/// direction `angle`; logistic output with cross-entropy loss.
struct ClassifySpec {
  double angle = 0.0;
  double separation = 2.0;
  double spread = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  MlpShape model{2, 16, 1};
  int dataset_size = 200;

  void validate() const;
};

using TaskParams = std::variant<QuadraticSpec, SinusoidSpec, ClassifySpec>;

/// Row-major samples; targets hold one value per output unit.
struct Dataset {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const { return output_dim == 0 ? 0 : targets.size() / static_cast<std::size_t>(output_dim); }
};

/// Indices into a task's dataset. Empty with `full == true` means every point.
struct DataBatch {
  std::vector<std::uint32_t> indices;
  bool full = true;
};

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

struct TaskOptions {
  UpdateRule rule = UpdateRule::constant(0.01);
  int step_budget = 10;
  int batch_size = 10;
  bool full_batch = false;
};

/// A learning process: objective, data, update rule and step budget.
/// Immutable after construction and cheap to copy (the dataset is shared).
class Task {
 public:
  Task(TaskParams params, std::uint64_t data_seed, TaskOptions options);

  TaskFamily family() const;
  const TaskParams& params() const { return params_; }
  std::uint64_t data_seed() const { return data_seed_; }
  const UpdateRule& update_rule() const { return options_.rule; }
  int step_budget() const { return options_.step_budget; }
  int batch_size() const { return options_.batch_size; }
  bool full_batch() const { return options_.full_batch; }
  const TaskOptions& options() const { return options_; }
  std::size_t param_count() const;
  bool is_classification() const { return family() == TaskFamily::synth_classify; }
  const Dataset& dataset() const { return *data_; }

  /// Minibatch drawn with replacement, or the full batch in full-batch mode.
  DataBatch sample_batch(Rng& rng) const;
  DataBatch full_data() const { return DataBatch{{}, true}; }

  /// Copy with a different update rule / budget, sharing the dataset.
  Task with_options(TaskOptions options) const;

 private:
  TaskParams params_;
  std::uint64_t data_seed_;
  TaskOptions options_;
  std::shared_ptr<const Dataset> data_;
};

/// Loss and analytic gradient on `batch`. Throws NumericalError when either is
/// non-finite, LeapError on a parameter-count mismatch.
LossGrad loss_and_grad(const Task& task, std::span<const double> theta, const DataBatch& batch);

double loss_only(const Task& task, std::span<const double> theta, const DataBatch& batch);

/// Training error on `batch`: 0/1 error rate for classification, the loss
/// otherwise.
double training_error(const Task& task, std::span<const double> theta, const DataBatch& batch);

/// Random initialization for the task's model (zeros for quadratics).
ParamVector initial_parameters(const Task& task, Rng& rng, double scale = 1.0);

enum class SamplingMode { with_replacement, without_replacement };

struct TaskDistribution {
  std::vector<Task> tasks;
  SamplingMode mode = SamplingMode::with_replacement;

  bool empty() const { return tasks.empty(); }
  std::size_t param_count() const;
};

/// Draws `count` tasks i.i.d. (or a partial permutation without replacement).
std::vector<Task> sample_task_batch(const TaskDistribution& dist, int count, Rng& rng);

// ---------------------------------------------------------------------------
// Distribution builders
// ---------------------------------------------------------------------------

struct SinusoidFamily {
  double amplitude_min = 0.1;
  double amplitude_max = 5.0;
  double phase_min = 0.0;
  double phase_max = 3.141592653589793;
  MlpShape model{1, 40, 1};
  double noise_std = 0.0;
  int dataset_size = 200;
};

struct ClassifyFamily {
  double separation = 3.0;
  double spread = 1.0;
  double offset_range = 1.0;
  MlpShape model{2, 16, 1};
  int dataset_size = 200;
};

struct QuadraticFamily {
  int dim = 2;
  double eigen_min = 0.5;
  double eigen_max = 1.0;
  double center_range = 1.0;
};

std::vector<Task> make_sinusoid_tasks(int count, std::uint64_t seed, const SinusoidFamily& family,
                                      const TaskOptions& options);
std::vector<Task> make_classify_tasks(int count, std::uint64_t seed, const ClassifyFamily& family,
                                      const TaskOptions& options);
/// Random SPD Hessians (random rotation of a spectrum in [eigen_min, eigen_max])
/// and uniform centers.
std::vector<Task> make_quadratic_tasks(int count, std::uint64_t seed, const QuadraticFamily& family,
                                       const TaskOptions& options);

/// Shortcut for a deterministic quadratic task.
Task make_quadratic_task(linalg::Matrix hessian, ParamVector center, double lr, int steps);

}  // namespace leap
