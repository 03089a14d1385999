// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "leap/log.hpp"
#include "leap/parallel.hpp"

namespace leap::verify {

namespace {

double segment_term(const Task& task, std::span<const double> theta, const DataBatch& batch,
                    std::span<const double> next_params, double next_loss, const GeometryConfig& cfg) {
  double s = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double d = next_params[j] - theta[j];
    s += d * d;
  }
  if (cfg.include_loss) {
    const double df = next_loss - loss_only(task, theta, batch);
    s += df * df;
  }
  return cfg.p() == 1 ? std::sqrt(s) : s;
}

Task full_batch(const Task& task) {
  TaskOptions o = task.options();
  o.full_batch = true;
  return task.with_options(o);
}

}  // namespace

ParamVector fd_segment_gradient(const Task& task, std::span<const double> params, const DataBatch& batch,
                                std::span<const double> next_params, double next_loss, const GeometryConfig& cfg,
                                double h) {
  if (!(h >= 1e-8 && h <= 1e-4)) throw LeapError("fd_segment_gradient: step must lie in [1e-8, 1e-4]");
  ParamVector x(params.begin(), params.end());
  ParamVector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = x[j];
    x[j] = orig + h;
    const double up = segment_term(task, x, batch, next_params, next_loss, cfg);
    x[j] = orig - h;
    const double down = segment_term(task, x, batch, next_params, next_loss, cfg);
    x[j] = orig;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

ParamVector fd_loss_gradient(const Task& task, std::span<const double> params, const DataBatch& batch, double h) {
  ParamVector x(params.begin(), params.end());
  ParamVector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = x[j];
    x[j] = orig + h;
    const double up = loss_only(task, x, batch);
    x[j] = orig - h;
    const double down = loss_only(task, x, batch);
    x[j] = orig;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  const double denom = std::max(norm2(a), norm2(b));
  if (denom == 0.0) return 0.0;
  return norm2(subtract(a, b)) / denom;
}

linalg::Matrix task_hessian(const Task& task, std::span<const double> params, double h) {
  if (const auto* q = std::get_if<QuadraticSpec>(&task.params())) return q->hessian;
  const std::size_t n = params.size();
  if (n > 50) throw UnsupportedError("finite-difference Hessian limited to n <= 50, got " + std::to_string(n));
  linalg::Matrix hess(n, n);
  ParamVector x(params.begin(), params.end());
  const DataBatch all = task.full_data();
  for (std::size_t j = 0; j < n; ++j) {
    const double orig = x[j];
    x[j] = orig + h;
    const auto up = loss_and_grad(task, x, all).grad;
    x[j] = orig - h;
    const auto down = loss_and_grad(task, x, all).grad;
    x[j] = orig;
    for (std::size_t i = 0; i < n; ++i) hess(i, j) = (up[i] - down[i]) / (2.0 * h);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) hess(i, j) = hess(j, i) = 0.5 * (hess(i, j) + hess(j, i));
  return hess;
}

std::vector<JacobianChain> jacobian_trace(const Task& task, std::span<const double> theta0, int steps) {
  const std::size_t n = theta0.size();
  if (n > 64) throw UnsupportedError("jacobian_chain limited to n <= 64, got " + std::to_string(n));
  if (task.family() != TaskFamily::quadratic && n > 50)
    throw UnsupportedError("jacobian_chain for non-quadratic tasks limited to n <= 50");
  const auto& rule = task.update_rule();
  std::vector<JacobianChain> trace;
  trace.push_back({linalg::Matrix::identity(n), 0});
  ParamVector theta(theta0.begin(), theta0.end());
  const DataBatch all = task.full_data();
  for (int i = 0; i < steps; ++i) {
    const auto hess = task_hessian(task, theta);
    const double lr = rule.learning_rate(i);
    linalg::Matrix factor = linalg::Matrix::identity(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) factor(r, c) -= lr * rule.scale(r) * hess(r, c);
    trace.push_back({factor * trace.back().jacobian, i + 1});
    theta = inner_step(theta, loss_and_grad(task, theta, all).grad, rule, i);
  }
  return trace;
}

JacobianChain jacobian_chain(const Task& task, std::span<const double> theta0, int steps) {
  return jacobian_trace(task, theta0, steps).back();
}

double jacobian_precision(const linalg::Matrix& jacobian) {
  if (!jacobian.square()) throw LeapError("jacobian_precision: matrix must be square");
  if (jacobian.rows() > 64) throw UnsupportedError("jacobian_precision limited to n <= 64");
  const auto eye = linalg::Matrix::identity(jacobian.rows());
  const double num = linalg::schatten1(eye - jacobian);
  const double den = linalg::schatten1(jacobian);
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

double total_path_distance(const std::vector<Task>& tasks, std::span<const double> theta0,
                           const GeometryConfig& geometry) {
  double total = 0.0;
  for (const auto& t : tasks) {
    PullForwardAccumulator acc(theta0.size(), geometry);
    InnerOptions io;
    io.store_path = false;
    run_inner_training(full_batch(t), theta0, 0, io, acc.visitor());
    total += acc.distance();
  }
  return total;
}

ParetoResult pareto_oracle(const std::vector<Task>& tasks, const Grid& grid, const GeometryConfig& geometry,
                           int threads) {
  const std::size_t n = grid.lower.size();
  if (n == 0 || n > 3) throw UnsupportedError("pareto_oracle supports 1 to 3 parameters");
  if (grid.upper.size() != n) throw LeapError("pareto_oracle: grid bounds differ in dimension");
  if (!(grid.resolution > 0.0)) throw LeapError("pareto_oracle: resolution must be > 0");
  for (const auto& t : tasks)
    if (t.param_count() != n) throw LeapError("pareto_oracle: task dimension differs from grid");

  std::vector<std::size_t> counts(n);
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) {
    counts[d] = static_cast<std::size_t>(std::floor((grid.upper[d] - grid.lower[d]) / grid.resolution + 1e-9)) + 1;
    total *= counts[d];
  }
  std::vector<Task> fb;
  for (const auto& t : tasks) fb.push_back(full_batch(t));

  auto point = [&](std::size_t flat) {
    ParamVector x(n);
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t k = flat % counts[d];
      flat /= counts[d];
      x[d] = grid.lower[d] + static_cast<double>(k) * grid.resolution;
    }
    return x;
  };

  std::vector<double> values(total);
  parallel_for(total, threads, [&](std::size_t i) { values[i] = total_path_distance(fb, point(i), geometry); });
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  return ParetoResult{point(best), values[best], total};
}

double final_task_loss(const Task& task, std::span<const double> theta0) {
  const Task t = full_batch(task);
  InnerOptions io;
  io.store_path = false;
  const auto path = run_inner_training(t, theta0, 0, io);
  return loss_only(t, path.final_params, t.full_data());
}

std::vector<bool> feasibility_check(std::span<const double> theta_new, std::span<const double> theta_old,
                                    const std::vector<Task>& tasks, double tolerance) {
  std::vector<bool> ok;
  ok.reserve(tasks.size());
  for (const auto& t : tasks) ok.push_back(final_task_loss(t, theta_new) <= final_task_loss(t, theta_old) + tolerance);
  return ok;
}

std::string AblationCell::label() const {
  return "p=" + std::to_string(p) + ",mu=" + (stabilize ? "1" : "0") + ",f=" + (include_loss ? "1" : "0");
}

AblationResult run_ablation(const TaskDistribution& dist, const MetaConfig& base,
                            const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 3) throw ConfigError("ablation needs at least 3 seeds");
  if (dist.empty()) throw ConfigError("task distribution is empty");
  AblationResult result;
  result.seeds = seeds;
  for (int p : {1, 2})
    for (bool stabilize : {false, true})
      for (bool include_loss : {false, true}) {
        AblationCell cell;
        cell.p = p;
        cell.stabilize = stabilize;
        cell.include_loss = include_loss;
        MetaConfig cfg = base;
        cfg.geometry.kind = p == 1 ? DistanceKind::length : DistanceKind::energy;
        cfg.geometry.stabilize = stabilize;
        cfg.geometry.include_loss = include_loss;
        std::vector<double> sum(static_cast<std::size_t>(cfg.meta_steps), 0.0);
        std::vector<double> count(sum.size(), 0.0);
        for (auto seed : seeds) {
          Rng init_rng(seed);
          std::vector<double> history;
          ParamVector final_params;
          try {
            auto run = run_leap(dist, cfg, initial_parameters(dist.tasks.front(), init_rng), seed);
            for (const auto& r : run.history) history.push_back(r.mean_loss);
            final_params = std::move(run.theta0);
          } catch (const NumericalError& e) {
            log_warn("ablation " + cell.label() + " seed " + std::to_string(seed) + ": " + e.what());
            cell.diverged.push_back(seed);
          }
          for (std::size_t s = 0; s < history.size(); ++s) {
            sum[s] += history[s];
            count[s] += 1.0;
          }
          cell.histories.push_back(std::move(history));
          cell.final_params.push_back(std::move(final_params));
        }
        for (std::size_t s = 0; s < sum.size(); ++s)
          sum[s] = count[s] > 0.0 ? sum[s] / count[s] : std::numeric_limits<double>::quiet_NaN();
        cell.mean_loss = std::move(sum);
        cell.auc = area_under_curve(cell.mean_loss, false);
        result.cells.push_back(std::move(cell));
      }
  return result;
}

long steps_to_threshold(std::span<const double> history, double threshold, int window) {
  const auto w = static_cast<std::size_t>(std::max(window, 1));
  double running = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    running += history[i];
    if (i >= w) running -= history[i - w];
    if (i + 1 >= w && running / static_cast<double>(w) <= threshold) return static_cast<long>(i);
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Reports and suites
// ---------------------------------------------------------------------------

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string Report::to_json() const {
  nlohmann::ordered_json j;
  j["suite"] = suite;
  j["passed"] = passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json cj;
    cj["check_name"] = c.name;
    cj["status"] = c.passed ? "pass" : "fail";
    cj["max_error"] = c.max_error;
    cj["tolerance"] = c.tolerance;
    cj["seeds"] = c.seeds;
    j["checks"].push_back(cj);
  }
  if (!extra_json.empty()) j["details"] = nlohmann::ordered_json::parse(extra_json);
  return j.dump(2);
}

std::vector<Task> shared_curvature_batch(int dim, int tasks, int steps, std::uint64_t seed) {
  QuadraticFamily fam;
  fam.dim = dim;
  fam.eigen_min = 0.5;
  fam.eigen_max = 1.0;
  TaskOptions opts;
  opts.full_batch = true;
  opts.step_budget = steps;
  const auto proto = make_quadratic_tasks(1, seed, fam, opts);
  const auto& hess = std::get<QuadraticSpec>(proto.front().params()).hessian;
  const double lr = 1.0 / linalg::symmetric_eigen(hess).values.back();

  Rng rng(derive_seed(seed, 0xce27ULL));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Task> out;
  for (int t = 0; t < tasks; ++t) {
    ParamVector c(static_cast<std::size_t>(dim));
    for (double& v : c) v = u(rng);
    out.push_back(make_quadratic_task(hess, std::move(c), lr, steps));
  }
  return out;
}

Theorem1Outcome theorem1_run(const std::vector<Task>& batch, const MetaConfig& cfg, ParamVector theta0) {
  Theorem1Outcome out;
  MetaState state = MetaState::initial(std::move(theta0));
  out.max_increase = -std::numeric_limits<double>::infinity();
  out.worst_feasibility = -std::numeric_limits<double>::infinity();
  std::vector<double> old_final;
  for (const auto& t : batch) old_final.push_back(final_task_loss(t, state.theta0));
  for (int s = 0; s < cfg.meta_steps; ++s) {
    auto r = leap_meta_step(state, batch, cfg, 0);
    out.distances.push_back(r.record.mean_distance);
    state = std::move(r.state);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const double now = final_task_loss(batch[k], state.theta0);
      out.worst_feasibility = std::max(out.worst_feasibility, now - old_final[k]);
      if (now > old_final[k] + 1e-9) out.feasible = false;
      old_final[k] = now;
    }
  }
  // Distance at the final initialization, so every update is covered.
  out.distances.push_back(leap_meta_step(state, batch, cfg, 0).record.mean_distance);
  for (std::size_t i = 1; i < out.distances.size(); ++i)
    out.max_increase = std::max(out.max_increase, out.distances[i] - out.distances[i - 1]);
  if (!out.distances.empty()) out.total_decrease = out.distances.front() - out.distances.back();
  return out;
}

Report gradients_suite() {
  Report rep;
  rep.suite = "gradients";
  constexpr double kTol = 1e-5;
  const std::uint64_t seed = 20260101;
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);

  // Analytic loss gradients against central differences, 10 points per family.
  TaskOptions opts;
  opts.batch_size = 16;
  std::vector<std::pair<std::string, Task>> families;
  {
    QuadraticFamily qf;
    qf.dim = 6;
    families.emplace_back("loss_grad_quadratic", make_quadratic_tasks(1, seed, qf, opts).front());
    SinusoidFamily sf;
    sf.model.hidden = 8;
    sf.noise_std = 0.1;
    families.emplace_back("loss_grad_sinusoid_mlp", make_sinusoid_tasks(1, seed, sf, opts).front());
    ClassifyFamily cf;
    cf.model.hidden = 6;
    families.emplace_back("loss_grad_synth_classify", make_classify_tasks(1, seed, cf, opts).front());
  }
  for (const auto& [name, task] : families) {
    CheckResult c{name, true, 0.0, kTol, {seed}};
    for (int k = 0; k < 10; ++k) {
      const ParamVector theta = initial_parameters(task, rng);
      ParamVector x = theta;
      for (double& v : x) v += 0.5 * g(rng);
      const DataBatch b = task.sample_batch(rng);
      const double err = relative_error(loss_and_grad(task, x, b).grad, fd_loss_gradient(task, x, b));
      c.max_error = std::max(c.max_error, err);
    }
    c.passed = c.max_error < kTol;
    rep.checks.push_back(c);
  }

  // Pull-forward increments against the frozen-forward-point segment gradient.
  for (int p : {1, 2})
    for (bool include_loss : {false, true}) {
      GeometryConfig cfg;
      cfg.kind = p == 1 ? DistanceKind::length : DistanceKind::energy;
      cfg.include_loss = include_loss;
      cfg.stabilize = false;
      CheckResult c{"pull_forward_fd_p" + std::to_string(p) + (include_loss ? "_with_loss" : "_params_only"), true,
                    0.0, kTol, {seed}};
      for (int k = 0; k < 20; ++k) {
        Task task = families[static_cast<std::size_t>(k % 3)].second;
        if (k % 3 == 0) {
          QuadraticFamily qf;
          qf.dim = 1 + (k * 7) % 50;
          task = make_quadratic_tasks(1, seed + static_cast<std::uint64_t>(k), qf, opts).front();
        }
        ParamVector x = initial_parameters(task, rng);
        for (double& v : x) v += 0.5 * g(rng);
        const DataBatch b = task.sample_batch(rng);
        const auto lg = loss_and_grad(task, x, b);
        const auto next = inner_step(x, lg.grad, UpdateRule::constant(0.1), 0);
        const double next_loss = loss_only(task, next, task.sample_batch(rng));
        const auto inc = pull_forward_increment(x, lg.loss, lg.grad, next, next_loss, cfg);
        const auto fd = fd_segment_gradient(task, x, b, next, next_loss, cfg);
        c.max_error = std::max(c.max_error, relative_error(inc, fd));
      }
      c.passed = c.max_error < kTol;
      rep.checks.push_back(c);
    }
  return rep;
}

Report theorem1_suite() {
  Report rep;
  rep.suite = "theorem1";
  MetaConfig cfg;
  cfg.geometry.kind = DistanceKind::energy;
  cfg.geometry.include_loss = true;
  cfg.geometry.stabilize = false;
  cfg.beta = 1e-2;
  cfg.meta_steps = 200;
  const std::vector<int> dims = {2, 4, 6, 8, 10};
  CheckResult mono{"mean_distance_non_increasing", true, -std::numeric_limits<double>::infinity(), 1e-9, {}};
  CheckResult strict{"mean_distance_strict_total_decrease", true, 0.0, 0.0, {}};
  CheckResult feas{"feasibility_every_step", true, -std::numeric_limits<double>::infinity(), 1e-9, {}};
  nlohmann::ordered_json details = nlohmann::json::array();
  for (std::size_t b = 0; b < dims.size(); ++b) {
    const std::uint64_t seed = 100 + b;
    const auto batch = shared_curvature_batch(dims[b], 4, 100, seed);
    cfg.batch_size = static_cast<int>(batch.size());
    const auto out = theorem1_run(batch, cfg, ParamVector(static_cast<std::size_t>(dims[b]), 2.0));
    mono.max_error = std::max(mono.max_error, out.max_increase);
    mono.seeds.push_back(seed);
    strict.passed = strict.passed && out.total_decrease > 0.0;
    strict.max_error = std::max(strict.max_error, -out.total_decrease);
    strict.seeds.push_back(seed);
    feas.max_error = std::max(feas.max_error, out.worst_feasibility);
    feas.passed = feas.passed && out.feasible;
    feas.seeds.push_back(seed);
    details.push_back({{"dim", dims[b]},
                       {"initial_distance", out.distances.front()},
                       {"final_distance", out.distances.back()},
                       {"max_increase", out.max_increase}});
  }
  mono.passed = mono.max_error <= mono.tolerance;
  rep.checks = {mono, strict, feas};
  rep.extra_json = details.dump();
  return rep;
}

Report jacobian_suite() {
  Report rep;
  rep.suite = "jacobian";
  const std::uint64_t seed = 7;

  // Closed form (I - lr A)^K on a random quadratic.
  {
    QuadraticFamily qf;
    qf.dim = 5;
    TaskOptions o;
    o.rule = UpdateRule::constant(0.1);
    o.full_batch = true;
    const auto task = make_quadratic_tasks(1, seed, qf, o).front();
    const auto& a = std::get<QuadraticSpec>(task.params()).hessian;
    CheckResult c{"chain_matches_closed_form", true, 0.0, 1e-10, {seed}};
    ParamVector theta0(5, 0.3);
    for (int k : {1, 5, 20}) {
      const auto chain = jacobian_chain(task, theta0, k);
      const auto closed = linalg::power(linalg::Matrix::identity(5) - 0.1 * a, static_cast<unsigned>(k));
      c.max_error = std::max(c.max_error, linalg::max_abs_diff(chain.jacobian, closed));
    }
    c.passed = c.max_error <= c.tolerance;
    rep.checks.push_back(c);
  }

  // Precision ordering on quadratics with unit spectral radius.
  {
    QuadraticFamily qf;
    qf.dim = 6;
    qf.eigen_min = 0.2;
    qf.eigen_max = 1.0;
    TaskOptions o;
    o.full_batch = true;
    auto base = make_quadratic_tasks(1, seed, qf, o).front();
    auto spec = std::get<QuadraticSpec>(base.params());
    const double top = linalg::symmetric_eigen(spec.hessian).values.back();
    spec.hessian = (1.0 / top) * spec.hessian;
    const std::vector<double> rates = {0.01, 0.1, 0.5};
    CheckResult mono{"rho_monotone_in_lr", true, 0.0, 0.0, {seed}};
    CheckResult small{"rho_small_lr_below_0.25", true, 0.0, 0.25, {seed}};
    CheckResult large{"rho_large_lr_above_0.25", true, 0.0, 0.25, {seed}};
    nlohmann::ordered_json details = nlohmann::json::array();
    for (int k : {5, 10, 15, 20}) {
      std::vector<double> rho;
      for (double lr : rates) {
        const Task t = make_quadratic_task(spec.hessian, spec.center, lr, k);
        rho.push_back(jacobian_precision(jacobian_chain(t, spec.center, k).jacobian));
      }
      for (std::size_t i = 1; i < rho.size(); ++i) {
        mono.max_error = std::max(mono.max_error, rho[i - 1] - rho[i]);
        if (rho[i] < rho[i - 1]) mono.passed = false;
      }
      small.max_error = std::max(small.max_error, rho[0]);
      if (k == 20) {
        large.max_error = rho[2];
        large.passed = rho[2] > 0.25;
      }
      details.push_back({{"steps", k}, {"rho_0.01", rho[0]}, {"rho_0.1", rho[1]}, {"rho_0.5", rho[2]}});
    }
    small.passed = small.max_error < 0.25;
    rep.checks.push_back(mono);
    rep.checks.push_back(small);
    rep.checks.push_back(large);
    rep.extra_json = details.dump();
  }
  return rep;
}

Report ablation_suite(int threads) {
  Report rep;
  rep.suite = "ablation";
  SinusoidFamily sf;
  sf.model.hidden = 16;
  TaskOptions o;
  o.rule = UpdateRule::constant(0.02);
  o.step_budget = 10;
  o.batch_size = 10;
  TaskDistribution dist{make_sinusoid_tasks(10, 11, sf, o), SamplingMode::with_replacement};
  MetaConfig cfg;
  cfg.beta = 0.01;
  cfg.batch_size = 5;
  cfg.meta_steps = 40;
  cfg.threads = threads;
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const auto result = run_ablation(dist, cfg, seeds);

  CheckResult complete{"eight_distinct_cells", result.cells.size() == 8, 0.0, 0.0, seeds};
  for (std::size_t i = 0; i < result.cells.size(); ++i)
    for (std::size_t j = i + 1; j < result.cells.size(); ++j)
      if (result.cells[i].label() == result.cells[j].label()) complete.passed = false;
  rep.checks.push_back(complete);

  // The energy / no stabilizer / parameter-space cell is Reptile with epsilon = 2 beta.
  CheckResult reduction{"reptile_cell_matches_reptile", true, 0.0, 1e-10, seeds};
  const auto& cell = *std::find_if(result.cells.begin(), result.cells.end(), [](const AblationCell& c) {
    return c.p == 2 && !c.stabilize && !c.include_loss;
  });
  MetaConfig rcfg = cfg;
  rcfg.reptile_epsilon = 2.0 * cfg.beta;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    Rng init_rng(seeds[k]);
    const auto run = run_meta(MetaMethod::reptile, dist, rcfg, initial_parameters(dist.tasks.front(), init_rng),
                              seeds[k]);
    if (cell.final_params[k].empty()) {
      reduction.max_error = std::numeric_limits<double>::infinity();
      continue;
    }
    reduction.max_error = std::max(reduction.max_error, max_abs_diff(run.theta0, cell.final_params[k]));
  }
  reduction.passed = reduction.max_error <= reduction.tolerance;
  rep.checks.push_back(reduction);

  nlohmann::ordered_json details = nlohmann::json::object();
  for (const auto& c : result.cells) details[c.label()] = {{"auc", c.auc}, {"diverged_seeds", c.diverged}, {"mean_loss", c.mean_loss}};
  rep.extra_json = details.dump();
  return rep;
}

Report reptile_reduction_suite() {
  Report rep;
  rep.suite = "reptile_reduction";
  CheckResult c{"leap_equals_reptile_with_eps_2beta", true, 0.0, 1e-12, {}};
  MetaConfig cfg;
  cfg.geometry.kind = DistanceKind::energy;
  cfg.geometry.stabilize = false;
  cfg.geometry.include_loss = false;
  cfg.beta = 0.05;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TaskOptions o;
    o.rule = UpdateRule::constant(0.05);
    o.step_budget = 5 + static_cast<int>(seed);
    std::vector<Task> batch;
    if (seed % 2 == 0) {
      QuadraticFamily qf;
      qf.dim = 3 + static_cast<int>(seed);
      batch = make_quadratic_tasks(3, seed, qf, o);
    } else {
      SinusoidFamily sf;
      sf.model.hidden = 10;
      batch = make_sinusoid_tasks(3, seed, sf, o);
    }
    Rng rng(seed);
    auto state = MetaState::initial(initial_parameters(batch.front(), rng));
    if (batch.front().family() == TaskFamily::quadratic)
      for (double& v : state.theta0) v = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    const auto leap = leap_meta_step(state, batch, cfg, seed);
    const auto reptile = reptile_meta_step(state, batch, 2.0 * cfg.beta, cfg, seed);
    c.max_error = std::max(c.max_error, max_abs_diff(leap.state.theta0, reptile.state.theta0));
    c.seeds.push_back(seed);
  }
  c.passed = c.max_error <= c.tolerance;
  rep.checks.push_back(c);
  return rep;
}

Report run_suite(const std::string& name, int threads) {
  if (name == "gradients") return gradients_suite();
  if (name == "theorem1") return theorem1_suite();
  if (name == "jacobian") return jacobian_suite();
  if (name == "ablation") return ablation_suite(threads);
  if (name == "reptile_reduction") return reptile_reduction_suite();
  throw ConfigError("unknown verification suite '" + name + "'");
}

}  // namespace leap::verify
