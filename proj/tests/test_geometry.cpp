// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "leap/geometry.hpp"

using namespace leap;
using linalg::Matrix;

namespace {

GeometryConfig geometry(int p, bool include_loss, bool stabilize) {
  GeometryConfig g;
  g.kind = p == 1 ? DistanceKind::length : DistanceKind::energy;
  g.include_loss = include_loss;
  g.stabilize = stabilize;
  return g;
}

/// Independent evaluation of |(next - theta, next_f - f(theta))|^p.
double segment_term(const Task& t, const ParamVector& theta, const ParamVector& next, double next_f, int p,
                    bool include_loss) {
  double s = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) s += (next[j] - theta[j]) * (next[j] - theta[j]);
  if (include_loss) {
    const double df = next_f - loss_only(t, theta, t.full_data());
    s += df * df;
  }
  return p == 1 ? std::sqrt(s) : s;
}

}  // namespace

TEST_CASE("segment norm by hand") {
  const ParamVector a{0.0}, b{3.0};
  CHECK(segment_norm({a, 0.0}, {b, 4.0}, true) == 5.0);
  CHECK(segment_norm({a, 0.0}, {b, 4.0}, false) == 3.0);
  CHECK(segment_norm({b, 4.0}, {b, 4.0}, true) == 0.0);
}

TEST_CASE("path distance by hand") {
  GradientPath path;
  path.params = {{0.0}, {0.5}};
  path.losses = {0.5, 0.125};
  CHECK(path_distance(path, geometry(2, true, false)) == doctest::Approx(0.390625).epsilon(1e-15));
  CHECK(path_distance(path, geometry(1, true, false)) == doctest::Approx(0.625).epsilon(1e-15));
  GradientPath flat;
  flat.params = {{1.0}, {1.0}, {1.0}};
  flat.losses = {0.0, 0.0, 0.0};
  CHECK(path_distance(flat, geometry(1, true, false)) == 0.0);
  CHECK(path_distance(flat, geometry(2, true, false)) == 0.0);
}

TEST_CASE("pull-forward increment by hand") {
  const ParamVector theta{0.0}, grad{-1.0}, next{0.5};
  CHECK(pull_forward_increment(theta, 0.5, grad, next, 0.125, geometry(2, true, false))[0] ==
        doctest::Approx(-1.75).epsilon(1e-15));
  CHECK(pull_forward_increment(theta, 0.5, grad, next, 0.125, geometry(2, false, false))[0] ==
        doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("stabilizer replaces an ascending loss increment by its negation") {
  const ParamVector theta{0.0}, grad{1.0}, next{-0.3};
  // delta f = +0.2 under the stabilizer behaves like delta f = -0.2 without it.
  const auto stab = pull_forward_increment(theta, 1.0, grad, next, 1.2, geometry(2, true, true));
  const auto flipped = pull_forward_increment(theta, 1.0, grad, next, 0.8, geometry(2, true, false));
  CHECK(stab[0] == doctest::Approx(flipped[0]).epsilon(1e-15));
  // Descending increments are left alone.
  CHECK(pull_forward_increment(theta, 1.0, grad, next, 0.8, geometry(1, true, true)) ==
        pull_forward_increment(theta, 1.0, grad, next, 0.8, geometry(1, true, false)));
}

TEST_CASE("stabilizer value") {
  CHECK(stabilizer_value(1.0, 0.8) == 0.0);
  CHECK(stabilizer_value(1.0, 1.2) == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK(stabilizer_value(1.0, 1.0) == 0.0);
}

TEST_CASE("increment is the gradient of the frozen segment term") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> eig(0.3, 2.0);
  const double h = 1e-6;
  for (int p : {1, 2})
    for (bool include_loss : {false, true})
      for (int trial = 0; trial < 20; ++trial) {
        CAPTURE(p);
        CAPTURE(include_loss);
        const std::size_t n = 3;
        Matrix a = Matrix::diagonal(std::vector<double>{eig(gen), eig(gen), eig(gen)});
        a(0, 1) = a(1, 0) = 0.1 * g(gen);
        const Task t = make_quadratic_task(a, {g(gen), g(gen), g(gen)}, 0.1, 1);
        ParamVector theta(n), next(n);
        for (auto& v : theta) v = g(gen);
        for (auto& v : next) v = g(gen);
        const double next_f = std::abs(g(gen));
        const auto lg = loss_and_grad(t, theta, t.full_data());
        const auto inc = pull_forward_increment(theta, lg.loss, lg.grad, next, next_f, geometry(p, include_loss, false));
        ParamVector fd(n);
        for (std::size_t j = 0; j < n; ++j) {
          ParamVector up = theta, down = theta;
          up[j] += h;
          down[j] -= h;
          fd[j] = (segment_term(t, up, next, next_f, p, include_loss) -
                   segment_term(t, down, next, next_f, p, include_loss)) /
                  (2 * h);
        }
        CHECK(norm2(subtract(inc, fd)) / std::max(norm2(inc), norm2(fd)) < 1e-5);
      }
}

TEST_CASE("p = 1 increments at coincident points are exactly zero") {
  const ParamVector theta{0.25, -1.0}, grad{1.0, 2.0};
  const auto inc = pull_forward_increment(theta, 0.3, grad, theta, 0.3, geometry(1, true, true));
  CHECK(inc == ParamVector{0.0, 0.0});
  const auto inc2 = pull_forward_increment(theta, 0.3, grad, theta, 0.3, geometry(2, true, false));
  CHECK(inc2 == ParamVector{0.0, 0.0});
}

TEST_CASE("scaling a path by s scales d1 by s and d2 by s^2") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    GradientPath path;
    for (int i = 0; i < 6; ++i) {
      path.params.push_back({g(gen), g(gen)});
      path.losses.push_back(std::abs(g(gen)));
    }
    const double s = 0.1 + std::abs(g(gen)) * 3;
    GradientPath scaled = path;
    for (auto& p : scaled.params)
      for (auto& v : p) v *= s;
    for (auto& f : scaled.losses) f *= s;
    for (bool include_loss : {false, true}) {
      const double d1 = path_distance(path, geometry(1, include_loss, false));
      const double d2 = path_distance(path, geometry(2, include_loss, false));
      CHECK(path_distance(scaled, geometry(1, include_loss, false)) == doctest::Approx(s * d1).epsilon(1e-12));
      CHECK(path_distance(scaled, geometry(2, include_loss, false)) == doctest::Approx(s * s * d2).epsilon(1e-12));
    }
  }
}

TEST_CASE("streamed distance at theta0 = psi0 equals the path distance") {
  SinusoidFamily sf;
  sf.model.hidden = 6;
  TaskOptions o;
  o.step_budget = 15;
  o.rule = UpdateRule::constant(0.02);
  const auto t = make_sinusoid_tasks(1, 4, sf, o)[0];
  Rng rng(4);
  const auto theta0 = initial_parameters(t, rng);
  for (int p : {1, 2})
    for (bool include_loss : {false, true}) {
      const auto cfg = geometry(p, include_loss, false);
      PullForwardAccumulator acc(theta0.size(), cfg);
      const auto path = run_inner_training(t, theta0, 9, {}, acc.visitor());
      CHECK(std::abs(acc.distance() - path_distance(path, cfg)) <= 1e-12 * std::max(1.0, acc.distance()));
    }
}

TEST_CASE("accumulated gradient is the sum of per-segment increments") {
  const Task t = make_quadratic_task(Matrix::from_rows({{1}}), {1}, 0.5, 3);
  const auto cfg = geometry(2, true, false);
  PullForwardAccumulator acc(1, cfg);
  const auto path = run_inner_training(t, ParamVector{0.0}, 0, {}, acc.visitor());
  double sum = 0;
  for (std::size_t i = 0; i < 3; ++i)
    sum += pull_forward_increment(path.params[i], path.losses[i], path.grads[i], path.params[i + 1],
                                  path.losses[i + 1], cfg)[0];
  CHECK(acc.gradient()[0] == doctest::Approx(sum).epsilon(1e-15));
}

TEST_CASE("geometry config validation") {
  GeometryConfig g;
  g.kind = static_cast<DistanceKind>(3);
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.kind = DistanceKind::energy;
  g.zero_norm_eps = 0.0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}
