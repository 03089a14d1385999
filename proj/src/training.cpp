// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/training.hpp"

#include <cmath>
#include <ostream>

namespace leap {

namespace {

constexpr double kPi = 3.141592653589793;

void check_loss(double loss, long step) {
  if (!std::isfinite(loss) || loss > kDivergenceThreshold)
    throw DivergenceError("inner training diverged, loss " + std::to_string(loss), step);
}

}  // namespace

double UpdateRule::learning_rate(long step) const {
  if (const auto* c = std::get_if<ConstantSchedule>(&schedule)) return c->lr;
  const auto& cs = std::get<CosineSchedule>(schedule);
  if (step >= cs.period) return 0.0;
  return cs.lr_max * 0.5 * (1.0 + std::cos(kPi * static_cast<double>(step) / static_cast<double>(cs.period)));
}

void UpdateRule::validate(std::size_t dim) const {
  if (const auto* c = std::get_if<ConstantSchedule>(&schedule)) {
    if (!(c->lr > 0.0) || !std::isfinite(c->lr)) throw ConfigError("learning rate must be > 0");
  } else {
    const auto& cs = std::get<CosineSchedule>(schedule);
    if (!(cs.lr_max > 0.0) || !std::isfinite(cs.lr_max)) throw ConfigError("cosine lr_max must be > 0");
    if (cs.period < 1) throw ConfigError("cosine period must be >= 1");
  }
  if (const auto* d = std::get_if<DiagonalPreconditioner>(&preconditioner)) {
    for (double v : d->diag)
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("diagonal preconditioner entries must be > 0");
    if (dim != 0 && d->diag.size() != dim)
      throw ConfigError("diagonal preconditioner has " + std::to_string(d->diag.size()) +
                        " entries, parameter dimension is " + std::to_string(dim));
  }
}

ParamVector inner_step(std::span<const double> theta, std::span<const double> grad, const UpdateRule& rule,
                       long step) {
  if (theta.size() != grad.size()) throw LeapError("inner_step: parameter and gradient dimensions differ");
  if (!all_finite(theta) || !all_finite(grad)) throw NumericalError("inner_step: non-finite input", step);
  const double lr = rule.learning_rate(step);
  ParamVector next(theta.begin(), theta.end());
  for (std::size_t j = 0; j < next.size(); ++j) next[j] -= lr * rule.scale(j) * grad[j];
  if (!all_finite(next)) throw NumericalError("inner_step: non-finite update", step);
  return next;
}

GradientPath run_inner_training(const Task& task, std::span<const double> theta0, std::uint64_t stream_seed,
                                const InnerOptions& options, const SegmentVisitor& visit) {
  if (theta0.size() != task.param_count())
    throw LeapError("initialization dimension " + std::to_string(theta0.size()) + " does not match task dimension " +
                    std::to_string(task.param_count()));
  const long steps = task.step_budget();
  Rng rng(stream_seed);
  GradientPath path;
  path.losses.reserve(static_cast<std::size_t>(steps) + 1);
  if (options.store_path) {
    path.params.reserve(static_cast<std::size_t>(steps) + 1);
    path.grads.reserve(static_cast<std::size_t>(steps));
  }

  ParamVector current(theta0.begin(), theta0.end());
  DataBatch batch = task.sample_batch(rng);
  LossGrad lg = loss_and_grad(task, current, batch);
  check_loss(lg.loss, 0);

  auto record = [&](const ParamVector& params, double loss, const DataBatch& b) {
    path.losses.push_back(loss);
    path.errors.push_back(task.is_classification() ? training_error(task, params, b) : loss);
    if (options.record_full_loss) path.full_losses.push_back(loss_only(task, params, task.full_data()));
    if (options.store_path) path.params.push_back(params);
  };
  record(current, lg.loss, batch);

  for (long i = 0; i < steps; ++i) {
    ParamVector next = inner_step(current, lg.grad, task.update_rule(), i);
    DataBatch next_batch = task.sample_batch(rng);
    LossGrad next_lg = loss_and_grad(task, next, next_batch);
    check_loss(next_lg.loss, i + 1);
    if (visit) visit(Segment{i, current, lg.loss, lg.grad, next, next_lg.loss});
    if (options.store_path) path.grads.push_back(std::move(lg.grad));
    record(next, next_lg.loss, next_batch);
    current = std::move(next);
    lg = std::move(next_lg);
  }
  path.final_params = std::move(current);
  return path;
}

double replay_error(const GradientPath& path, const UpdateRule& rule) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < path.params.size(); ++i) {
    const auto replay = inner_step(path.params[i], path.grads[i], rule, static_cast<long>(i));
    worst = std::max(worst, max_abs_diff(replay, path.params[i + 1]));
  }
  return worst;
}

void write_path_trace(std::ostream& out, const GradientPath& path) {
  out << "step,loss,grad_norm,param_norm\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < path.losses.size(); ++i) {
    out << i << ',' << path.losses[i] << ',';
    if (i < path.grads.size()) out << norm2(path.grads[i]);
    out << ',';
    if (i < path.params.size()) out << norm2(path.params[i]);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace leap
