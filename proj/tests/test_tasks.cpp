// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "leap/tasks.hpp"

using namespace leap;
using linalg::Matrix;

namespace {

TaskOptions opts(double lr = 0.01, int steps = 5, int batch = 10) {
  TaskOptions o;
  o.rule = UpdateRule::constant(lr);
  o.step_budget = steps;
  o.batch_size = batch;
  return o;
}

/// Loss of a one-hidden-layer tanh net written out directly (test oracle).
double reference_loss(const Task& task, const ParamVector& theta, const std::vector<std::uint32_t>& idx) {
  const Dataset& d = task.dataset();
  const bool classify = task.is_classification();
  const int in = d.input_dim;
  const int hid = static_cast<int>((theta.size() - 1) / static_cast<std::size_t>(in + 2));
  double total = 0.0;
  for (auto s : idx) {
    double z = theta[static_cast<std::size_t>(hid * in + hid + hid)];
    for (int j = 0; j < hid; ++j) {
      double a = theta[static_cast<std::size_t>(hid * in + j)];
      for (int k = 0; k < in; ++k) a += theta[static_cast<std::size_t>(j * in + k)] * d.inputs[s * in + k];
      z += theta[static_cast<std::size_t>(hid * in + hid + j)] * std::tanh(a);
    }
    const double t = d.targets[s];
    if (classify) {
      const double p = 1.0 / (1.0 + std::exp(-z));
      total += -(t * std::log(p) + (1 - t) * std::log(1 - p));
    } else {
      total += (z - t) * (z - t);
    }
  }
  return total / static_cast<double>(idx.size());
}

ParamVector central_difference(const Task& task, ParamVector theta, const DataBatch& batch, double h = 1e-6) {
  ParamVector g(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double keep = theta[j];
    theta[j] = keep + h;
    const double up = loss_only(task, theta, batch);
    theta[j] = keep - h;
    const double down = loss_only(task, theta, batch);
    theta[j] = keep;
    g[j] = (up - down) / (2 * h);
  }
  return g;
}

double rel_err(const ParamVector& a, const ParamVector& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  return scale == 0 ? 0 : std::sqrt(diff) / scale;
}

std::vector<Task> one_of_each(std::uint64_t seed) {
  SinusoidFamily sf;
  sf.model.hidden = 8;
  ClassifyFamily cf;
  cf.model.hidden = 6;
  QuadraticFamily qf;
  qf.dim = 5;
  return {make_quadratic_tasks(1, seed, qf, opts())[0], make_sinusoid_tasks(1, seed, sf, opts())[0],
          make_classify_tasks(1, seed, cf, opts())[0]};
}

}  // namespace

TEST_CASE("quadratic loss and gradient by hand") {
  const Task t = make_quadratic_task(Matrix::from_rows({{1}}), {1}, 0.5, 3);
  const auto lg = loss_and_grad(t, ParamVector{0.0}, t.full_data());
  CHECK(lg.loss == 0.5);
  CHECK(lg.grad == ParamVector{-1.0});
  const auto at_min = loss_and_grad(t, ParamVector{1.0}, t.full_data());
  CHECK(at_min.loss == 0.0);
  CHECK(at_min.grad == ParamVector{0.0});
}

TEST_CASE("quadratic gradient equals A (theta - c)") {
  const Matrix a = Matrix::from_rows({{2, 0.5}, {0.5, 1}});
  const Task t = make_quadratic_task(a, {1, -2}, 0.1, 1);
  const ParamVector theta{0.3, 0.7};
  const auto lg = loss_and_grad(t, theta, t.full_data());
  const double d0 = 0.3 - 1, d1 = 0.7 + 2;
  CHECK(lg.grad[0] == doctest::Approx(2 * d0 + 0.5 * d1));
  CHECK(lg.grad[1] == doctest::Approx(0.5 * d0 + d1));
  CHECK(lg.loss == doctest::Approx(0.5 * (2 * d0 * d0 + 2 * 0.5 * d0 * d1 + d1 * d1)));
}

TEST_CASE("MLP losses match a direct forward pass") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto tasks = one_of_each(seed);
    for (std::size_t k = 1; k < tasks.size(); ++k) {
      const Task& t = tasks[k];
      Rng rng(seed);
      const auto theta = initial_parameters(t, rng);
      const auto batch = t.sample_batch(rng);
      CHECK(loss_only(t, theta, batch) == doctest::Approx(reference_loss(t, theta, batch.indices)).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic gradients match central differences at random points") {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& t : one_of_each(7)) {
    CAPTURE(to_string(t.family()));
    for (int point = 0; point < 10; ++point) {
      ParamVector theta(t.param_count());
      for (auto& v : theta) v = g(gen);
      Rng rng(static_cast<std::uint64_t>(point));
      const auto batch = t.sample_batch(rng);
      const auto analytic = loss_and_grad(t, theta, batch).grad;
      CHECK(rel_err(analytic, central_difference(t, theta, batch)) < 1e-5);
    }
  }
}

TEST_CASE("sinusoid data follow amplitude * sin(x - phase)") {
  SinusoidSpec s;
  s.amplitude = 2.5;
  s.phase = 0.7;
  s.model.hidden = 4;
  const Task t(s, 9, opts());
  const Dataset& d = t.dataset();
  REQUIRE(d.size() == 200);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.inputs[i] >= -5.0);
    CHECK(d.inputs[i] <= 5.0);
    CHECK(d.targets[i] == doctest::Approx(2.5 * std::sin(d.inputs[i] - 0.7)).epsilon(1e-15));
  }
}

TEST_CASE("classification error counts sign mistakes") {
  ClassifySpec c;
  c.model.hidden = 2;
  const Task t(c, 4, opts());
  // Zero weights and a positive output bias predict class 1 everywhere: half the labels are wrong.
  ParamVector theta(t.param_count(), 0.0);
  theta.back() = 1.0;
  CHECK(training_error(t, theta, t.full_data()) == doctest::Approx(0.5));
  CHECK(loss_only(t, theta, t.full_data()) == doctest::Approx(0.5 * std::log1p(std::exp(-1.0)) +
                                                              0.5 * std::log1p(std::exp(1.0))));
}

TEST_CASE("equal seeds give identical batches and gradients") {
  const auto a = one_of_each(5);
  const auto b = one_of_each(5);
  for (std::size_t k = 0; k < a.size(); ++k) {
    Rng r1(77), r2(77);
    const auto theta = initial_parameters(a[k], r1);
    CHECK(theta == initial_parameters(b[k], r2));
    const auto b1 = a[k].sample_batch(r1);
    const auto b2 = b[k].sample_batch(r2);
    CHECK(b1.indices == b2.indices);
    const auto g1 = loss_and_grad(a[k], theta, b1);
    const auto g2 = loss_and_grad(b[k], theta, b2);
    CHECK(g1.loss == g2.loss);
    CHECK(g1.grad == g2.grad);
  }
}

TEST_CASE("task batch sampling") {
  SinusoidFamily sf;
  sf.model.hidden = 4;
  const auto twenty = make_sinusoid_tasks(20, 3, sf, opts());

  SUBCASE("single-task distribution repeats the task") {
    TaskDistribution d{{twenty[0]}, SamplingMode::with_replacement};
    Rng rng(1);
    const auto batch = sample_task_batch(d, 3, rng);
    REQUIRE(batch.size() == 3);
    for (const auto& t : batch) CHECK(t.data_seed() == twenty[0].data_seed());
  }
  SUBCASE("without replacement, B = n draws a permutation") {
    TaskDistribution d{twenty, SamplingMode::without_replacement};
    Rng rng(2);
    const auto batch = sample_task_batch(d, 20, rng);
    std::set<std::uint64_t> seen;
    for (const auto& t : batch) seen.insert(t.data_seed());
    CHECK(seen.size() == 20);
    Rng rng2(2);
    CHECK_THROWS_AS(sample_task_batch(d, 21, rng2), ConfigError);
  }
  SUBCASE("same seed, same batch") {
    TaskDistribution d{twenty, SamplingMode::with_replacement};
    Rng r1(7), r2(7);
    const auto x = sample_task_batch(d, 5, r1);
    const auto y = sample_task_batch(d, 5, r2);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].data_seed() == y[i].data_seed());
  }
  SUBCASE("empty distribution") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_task_batch(TaskDistribution{}, 1, rng), ConfigError);
  }
}

TEST_CASE("quadratic family has SPD Hessians with the requested spectrum") {
  QuadraticFamily f;
  f.dim = 6;
  f.eigen_min = 0.3;
  f.eigen_max = 2.0;
  for (const auto& t : make_quadratic_tasks(5, 12, f, opts())) {
    const auto& q = std::get<QuadraticSpec>(t.params());
    CHECK(linalg::asymmetry(q.hessian) <= 1e-12);
    const auto eig = linalg::symmetric_eigen(q.hessian);
    CHECK(eig.values.front() >= 0.3 - 1e-10);
    CHECK(eig.values.back() <= 2.0 + 1e-10);
  }
}

TEST_CASE("invalid task definitions are rejected") {
  CHECK_THROWS_AS(make_quadratic_task(Matrix::from_rows({{1, 2}, {0, 1}}), {0, 0}, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(make_quadratic_task(Matrix::from_rows({{1, 0}, {0, -1}}), {0, 0}, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(make_quadratic_task(Matrix::from_rows({{1}}), {0}, 0.1, 0), ConfigError);
  SinusoidSpec s;
  s.amplitude = 6.0;
  CHECK_THROWS_AS(Task(s, 1, opts()), ConfigError);
  s.amplitude = 1.0;
  s.model.hidden = 0;
  CHECK_THROWS_AS(Task(s, 1, opts()), ConfigError);
  s.model.hidden = 4;
  CHECK_THROWS_AS(Task(s, 1, opts(0.1, 5, 0)), ConfigError);
  CHECK_THROWS_AS(Task(s, 1, opts(-0.1)), ConfigError);
  CHECK_THROWS_WITH_AS(parse_task_family("hexagon"), doctest::Contains("hexagon"), ConfigError);
}

TEST_CASE("dimension mismatch is an error") {
  const Task t = make_quadratic_task(Matrix::identity(2), {0, 0}, 0.1, 1);
  CHECK_THROWS_AS(loss_and_grad(t, ParamVector{1.0}, t.full_data()), LeapError);
}
