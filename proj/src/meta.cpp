// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/meta.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "leap/log.hpp"
#include "leap/parallel.hpp"

namespace leap {

namespace {

struct TaskOutcome {
  bool ok = false;
  std::string message;
  ParamVector meta_grad;  // summed pull-forward increments
  double distance = 0.0;
  double mean_loss = 0.0;
  double final_loss = 0.0;
  double mean_error = 0.0;
  ParamVector final_params;
  ParamVector final_grad;  // FOMAML only
};

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::uint64_t task_stream(std::uint64_t seed, const Task& task, long step, std::size_t index) {
  return derive_seed(seed, task.data_seed(), static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(index));
}

/// Inner trainings for the batch, one outcome slot per task. Slots are filled
/// independently and reduced by the caller in index order.
std::vector<TaskOutcome> run_batch(const MetaState& state, const std::vector<Task>& batch, const MetaConfig& cfg,
                                   std::uint64_t seed, bool need_final_grad) {
  for (const auto& t : batch)
    if (t.param_count() != state.theta0.size())
      throw LeapError("task dimension " + std::to_string(t.param_count()) + " does not match initialization " +
                      std::to_string(state.theta0.size()));

  std::vector<TaskOutcome> out(batch.size());
  parallel_for(batch.size(), cfg.threads, [&](std::size_t k) {
    const Task& task = batch[k];
    const std::uint64_t stream = task_stream(seed, task, state.step, k);
    TaskOutcome& o = out[k];
    PullForwardAccumulator acc(state.theta0.size(), cfg.geometry);
    try {
      InnerOptions opts;
      opts.store_path = !cfg.streaming;
      const auto path = run_inner_training(task, state.theta0, stream, opts, acc.visitor());
      o.meta_grad = acc.gradient();
      o.distance = acc.distance();
      o.mean_loss = mean_of(path.losses);
      o.final_loss = path.final_loss();
      o.mean_error = mean_of(path.errors);
      o.final_params = path.final_params;
      if (need_final_grad) {
        Rng rng(derive_seed(stream, 0xf0a1ULL));
        o.final_grad = loss_and_grad(task, o.final_params, task.sample_batch(rng)).grad;
      }
      o.ok = true;
    } catch (const NumericalError& e) {
      o.message = std::string(to_string(task.family())) + " task " + std::to_string(k) + ": " + e.what();
    }
  });
  return out;
}

/// Batch statistics over surviving tasks; throws when nothing survived.
MetaStepRecord summarize(const std::vector<TaskOutcome>& outcomes, long step) {
  MetaStepRecord rec;
  rec.step = step;
  std::size_t alive = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      rec.dropped.push_back(o.message);
      log_warn("meta step " + std::to_string(step) + ": dropped " + o.message);
      continue;
    }
    ++alive;
    rec.mean_distance += o.distance;
    rec.mean_loss += o.mean_loss;
    rec.final_loss += o.final_loss;
    rec.mean_error += o.mean_error;
  }
  if (alive == 0) throw NumericalError("every task in the meta batch diverged", step);
  const double inv = 1.0 / static_cast<double>(alive);
  rec.mean_distance *= inv;
  rec.mean_loss *= inv;
  rec.final_loss *= inv;
  rec.mean_error *= inv;
  return rec;
}

std::size_t survivors(const std::vector<TaskOutcome>& outcomes) {
  std::size_t n = 0;
  for (const auto& o : outcomes) n += o.ok ? 1 : 0;
  return n;
}

/// theta0 <- theta0 - step(direction) under the configured meta optimizer.
void apply_meta_update(MetaState& s, const ParamVector& direction, const MetaConfig& cfg) {
  if (std::holds_alternative<SgdMeta>(cfg.optimizer)) {
    axpy(-cfg.beta, direction, s.theta0);
    return;
  }
  const auto& adam = std::get<AdamMeta>(cfg.optimizer);
  const std::size_t n = s.theta0.size();
  if (s.first_moment.size() != n) s.first_moment.assign(n, 0.0);
  if (s.second_moment.size() != n) s.second_moment.assign(n, 0.0);
  const double t = static_cast<double>(s.step + 1);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t j = 0; j < n; ++j) {
    const double g = direction[j];
    s.first_moment[j] = adam.beta1 * s.first_moment[j] + (1.0 - adam.beta1) * g;
    s.second_moment[j] = adam.beta2 * s.second_moment[j] + (1.0 - adam.beta2) * g * g;
    const double m = s.first_moment[j] / c1;
    const double v = s.second_moment[j] / c2;
    s.theta0[j] -= adam.lr * m / (std::sqrt(v) + adam.eps);
  }
}

}  // namespace

std::string_view to_string(MetaMethod m) {
  switch (m) {
    case MetaMethod::leap: return "leap";
    case MetaMethod::reptile: return "reptile";
    case MetaMethod::fomaml: return "fomaml";
    case MetaMethod::finetune: return "finetune";
    case MetaMethod::none: return "none";
  }
  return "unknown";
}

MetaMethod parse_meta_method(std::string_view name) {
  if (name == "leap") return MetaMethod::leap;
  if (name == "reptile") return MetaMethod::reptile;
  if (name == "fomaml") return MetaMethod::fomaml;
  if (name == "finetune" || name == "joint_finetune") return MetaMethod::finetune;
  if (name == "none" || name == "no_pretraining" || name == "random") return MetaMethod::none;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void MetaConfig::validate() const {
  geometry.validate();
  if (!(beta > 0.0)) throw ConfigError("meta step size beta must be > 0");
  if (batch_size < 1) throw ConfigError("meta batch size must be >= 1");
  if (meta_steps < 0) throw ConfigError("meta_steps must be >= 0");
  if (!(reptile_epsilon > 0.0)) throw ConfigError("reptile epsilon must be > 0");
  if (!(fomaml_lr > 0.0)) throw ConfigError("fomaml lr must be > 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (const auto* a = std::get_if<AdamMeta>(&optimizer)) {
    if (!(a->lr > 0.0) || !(a->beta1 >= 0.0 && a->beta1 < 1.0) || !(a->beta2 >= 0.0 && a->beta2 < 1.0) ||
        !(a->eps > 0.0))
      throw ConfigError("invalid adaptive-moment meta optimizer settings");
  }
}

MetaState MetaState::initial(ParamVector theta0) {
  MetaState s;
  s.accum.assign(theta0.size(), 0.0);
  s.theta0 = std::move(theta0);
  return s;
}

MetaStepResult leap_meta_step(const MetaState& state, const std::vector<Task>& batch, const MetaConfig& cfg,
                              std::uint64_t seed) {
  const auto outcomes = run_batch(state, batch, cfg, seed, false);
  MetaStepResult res{state, summarize(outcomes, state.step)};
  MetaState& s = res.state;
  s.accum.assign(s.theta0.size(), 0.0);
  for (const auto& o : outcomes)
    if (o.ok) axpy(1.0, o.meta_grad, s.accum);
  ParamVector direction = s.accum;
  const double inv_b = 1.0 / static_cast<double>(survivors(outcomes));
  for (double& v : direction) v *= inv_b;
  res.record.grad_norm = norm2(direction);
  apply_meta_update(s, direction, cfg);
  if (!all_finite(s.theta0)) throw NumericalError("meta update produced a non-finite initialization", state.step);
  ++s.step;
  return res;
}

MetaStepResult reptile_meta_step(const MetaState& state, const std::vector<Task>& batch, double epsilon,
                                 const MetaConfig& cfg, std::uint64_t seed) {
  const auto outcomes = run_batch(state, batch, cfg, seed, false);
  MetaStepResult res{state, summarize(outcomes, state.step)};
  MetaState& s = res.state;
  ParamVector mean_shift(s.theta0.size(), 0.0);
  for (const auto& o : outcomes)
    if (o.ok)
      for (std::size_t j = 0; j < mean_shift.size(); ++j) mean_shift[j] += o.final_params[j] - state.theta0[j];
  const double inv_b = 1.0 / static_cast<double>(survivors(outcomes));
  for (double& v : mean_shift) v *= inv_b;
  s.accum = mean_shift;
  res.record.grad_norm = norm2(mean_shift);
  axpy(epsilon, mean_shift, s.theta0);
  ++s.step;
  return res;
}

MetaStepResult fomaml_meta_step(const MetaState& state, const std::vector<Task>& batch, double lr,
                                const MetaConfig& cfg, std::uint64_t seed) {
  const auto outcomes = run_batch(state, batch, cfg, seed, true);
  MetaStepResult res{state, summarize(outcomes, state.step)};
  MetaState& s = res.state;
  ParamVector mean_grad(s.theta0.size(), 0.0);
  for (const auto& o : outcomes)
    if (o.ok) axpy(1.0, o.final_grad, mean_grad);
  const double inv_b = 1.0 / static_cast<double>(survivors(outcomes));
  for (double& v : mean_grad) v *= inv_b;
  s.accum = mean_grad;
  res.record.grad_norm = norm2(mean_grad);
  axpy(-lr, mean_grad, s.theta0);
  ++s.step;
  return res;
}

MetaStepResult finetune_meta_step(const MetaState& state, const std::vector<Task>& batch, const MetaConfig& /*cfg*/,
                                  std::uint64_t seed) {
  MetaStepResult res{state, MetaStepRecord{}};
  res.record.step = state.step;
  MetaState& s = res.state;
  int longest = 0;
  for (const auto& t : batch) {
    if (t.param_count() != s.theta0.size()) throw LeapError("task dimension does not match initialization");
    longest = std::max(longest, t.step_budget());
  }
  std::vector<Rng> streams;
  for (std::size_t k = 0; k < batch.size(); ++k) streams.emplace_back(task_stream(seed, batch[k], state.step, k));

  const ParamVector start = s.theta0;
  double loss_sum = 0.0;
  double error_sum = 0.0;
  std::size_t visits = 0;
  for (int i = 0; i < longest; ++i) {
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (i >= batch[k].step_budget()) continue;
      const DataBatch b = batch[k].sample_batch(streams[k]);
      const auto lg = loss_and_grad(batch[k], s.theta0, b);
      if (!std::isfinite(lg.loss) || lg.loss > kDivergenceThreshold)
        throw DivergenceError("joint finetuning diverged", i);
      loss_sum += lg.loss;
      error_sum += batch[k].is_classification() ? training_error(batch[k], s.theta0, b) : lg.loss;
      ++visits;
      s.theta0 = inner_step(s.theta0, lg.grad, batch[k].update_rule(), i);
    }
  }
  s.accum = subtract(s.theta0, start);
  res.record.mean_loss = visits ? loss_sum / static_cast<double>(visits) : 0.0;
  res.record.mean_error = visits ? error_sum / static_cast<double>(visits) : 0.0;
  double final_sum = 0.0;
  for (const auto& t : batch) final_sum += loss_only(t, s.theta0, t.full_data());
  res.record.final_loss = final_sum / static_cast<double>(batch.size());
  res.record.grad_norm = norm2(s.accum);
  ++s.step;
  return res;
}

MetaRun run_meta(MetaMethod method, const TaskDistribution& dist, const MetaConfig& cfg, ParamVector theta0,
                 std::uint64_t seed) {
  cfg.validate();
  if (dist.empty()) throw ConfigError("task distribution is empty");
  MetaRun run;
  MetaState state = MetaState::initial(std::move(theta0));
  if (method == MetaMethod::none) {
    run.theta0 = std::move(state.theta0);
    return run;
  }
  for (int s = 0; s < cfg.meta_steps; ++s) {
    if (cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0) run.snapshots.emplace_back(s, state.theta0);
    Rng batch_rng(derive_seed(seed, 0xba7cULL, static_cast<std::uint64_t>(s)));
    const auto batch = sample_task_batch(dist, cfg.batch_size, batch_rng);
    MetaStepResult r;
    switch (method) {
      case MetaMethod::leap: r = leap_meta_step(state, batch, cfg, seed); break;
      case MetaMethod::reptile: r = reptile_meta_step(state, batch, cfg.reptile_epsilon, cfg, seed); break;
      case MetaMethod::fomaml: r = fomaml_meta_step(state, batch, cfg.fomaml_lr, cfg, seed); break;
      case MetaMethod::finetune: r = finetune_meta_step(state, batch, cfg, seed); break;
      case MetaMethod::none: break;
    }
    state = std::move(r.state);
    log_debug(std::string(to_string(method)) + " step " + std::to_string(s) + " loss " +
              std::to_string(r.record.mean_loss) + " |g| " + std::to_string(r.record.grad_norm));
    const double gnorm = r.record.grad_norm;
    run.history.push_back(std::move(r.record));
    if (cfg.early_stop_grad_norm > 0.0 && gnorm < cfg.early_stop_grad_norm) {
      log_info("early stop at meta step " + std::to_string(s) + ": meta-gradient norm below threshold");
      break;
    }
  }
  if (cfg.snapshot_every > 0) run.snapshots.emplace_back(state.step, state.theta0);
  run.theta0 = std::move(state.theta0);
  return run;
}

double area_under_curve(std::span<const double> errors, bool percent) {
  const double scale = percent ? 100.0 : 1.0;
  if (errors.empty()) return 0.0;
  if (errors.size() == 1) return scale * errors.front();
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) area += 0.5 * (errors[i] + errors[i + 1]);
  return scale * area / static_cast<double>(errors.size() - 1);
}

std::vector<TransferRecord> evaluate_transfer(std::span<const double> theta0, const std::vector<Task>& heldout,
                                              int eval_steps, std::uint64_t seed, int threads) {
  if (eval_steps < 1) throw ConfigError("eval_steps must be >= 1");
  std::vector<TransferRecord> out(heldout.size());
  parallel_for(heldout.size(), threads, [&](std::size_t k) {
    TaskOptions opts = heldout[k].options();
    opts.step_budget = eval_steps;
    const Task task = heldout[k].with_options(opts);
    TransferRecord& r = out[k];
    r.task_index = k;
    try {
      InnerOptions io;
      io.store_path = false;
      const auto path = run_inner_training(task, theta0, derive_seed(seed, task.data_seed(), 0xe7a1ULL, k), io);
      r.losses = path.losses;
      r.errors = path.errors;
      r.auc = area_under_curve(r.errors, task.is_classification());
      r.final_loss = path.losses.back();
      r.final_error = path.errors.back();
    } catch (const NumericalError& e) {
      r.diverged = true;
      r.message = e.what();
      r.auc = std::numeric_limits<double>::quiet_NaN();
      r.final_loss = std::numeric_limits<double>::quiet_NaN();
      r.final_error = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return out;
}

double mean_auc(const std::vector<TransferRecord>& records) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : records)
    if (!r.diverged) {
      s += r.auc;
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace leap
