// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leap/meta.hpp"
#include "leap/tasks.hpp"

namespace leap {

enum class InitMode { random, zeros };

/// Task distribution as written in a config file. Task data for an experiment
/// seed s are generated from derive_seed(seed, s).
struct TaskSpec {
  TaskFamily family = TaskFamily::sinusoid_mlp;
  int count = 20;
  std::uint64_t seed = 1;
  SamplingMode sampling = SamplingMode::with_replacement;
  TaskOptions options;
  SinusoidFamily sinusoid;
  ClassifyFamily classify;
  QuadraticFamily quadratic;
  /// When non-empty, replaces the random quadratic family.
  std::vector<QuadraticSpec> explicit_quadratics;
};

struct HeldoutSpec {
  int count = 10;
  std::uint64_t seed = 2;
  int eval_steps = 100;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<std::uint64_t> seeds{1};
  std::string output = "runs";
  std::vector<MetaMethod> methods{MetaMethod::leap};
  TaskSpec tasks;
  std::optional<HeldoutSpec> heldout;
  MetaConfig meta;
  InitMode init = InitMode::random;
  double init_scale = 1.0;
  /// FNV-1a of the source text; stamped into checkpoints.
  std::uint64_t hash = 0;

  void validate() const;
};

/// Parses YAML text. Throws ConfigError with the 1-based line of the
/// offending node; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Training tasks for experiment seed `seed`.
TaskDistribution build_distribution(const ExperimentConfig& cfg, std::uint64_t seed);

/// Held-out tasks for experiment seed `seed`; same family and options as the
/// training tasks. Throws ConfigError when the config has no heldout section.
std::vector<Task> build_heldout(const ExperimentConfig& cfg, std::uint64_t seed);

/// Initialization shared by every method for experiment seed `seed`.
ParamVector initial_theta(const ExperimentConfig& cfg, const TaskDistribution& dist, std::uint64_t seed);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace leap
