// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "leap/meta.hpp"

namespace leap::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumericalError = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;  // replaces experiment.seeds
  std::string out;                    // replaces experiment.output when set
  int threads = 1;
  bool streaming = false;
  std::string checkpoint;             // evaluate: single checkpoint
  std::string suite;                  // verify
};

/// Meta-trains every configured method for every seed. Per method and seed,
/// writes <out>/<method>/seed_<s>/{history.csv,checkpoint.bin,timing.csv}.
int cmd_train(const Options& opts, std::ostream& out, std::ostream& err);

/// Scores checkpoints on held-out tasks: the one named by --checkpoint, or
/// every checkpoint cmd_train wrote for the config. Writes evaluation.csv and
/// evaluation_summary.csv under <out>.
int cmd_evaluate(const Options& opts, std::ostream& out, std::ostream& err);

/// Runs a verification suite and prints its JSON report (also written to
/// <out>/verify_<suite>.json when --out is given).
int cmd_verify(const Options& opts, std::ostream& out, std::ostream& err);

/// Runs the eight-cell geometry ablation and writes ablation.csv and
/// ablation_summary.csv under <out>.
int cmd_ablate(const Options& opts, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand first) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Sample mean and standard deviation (n - 1 denominator; 0 for n < 2).
std::pair<double, double> mean_std(const std::vector<double>& v);

}  // namespace leap::cli
