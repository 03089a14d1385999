// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/geometry.hpp"

#include <cmath>

namespace leap {

namespace {

double squared_segment(std::span<const double> a, std::span<const double> b, double df, bool include_loss) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = b[j] - a[j];
    s += d * d;
  }
  if (include_loss) s += df * df;
  return s;
}

double raise(double norm, int p) { return p == 1 ? norm : norm * norm; }

}  // namespace

void GeometryConfig::validate() const {
  if (p() != 1 && p() != 2) throw ConfigError("distance exponent p must be 1 or 2");
  if (!(zero_norm_eps > 0.0)) throw ConfigError("zero_norm_eps must be > 0");
}

double segment_norm(const ManifoldPoint& a, const ManifoldPoint& b, bool include_loss) {
  if (a.params.size() != b.params.size()) throw LeapError("segment_norm: dimension mismatch");
  return std::sqrt(squared_segment(a.params, b.params, b.loss - a.loss, include_loss));
}

double path_distance(const GradientPath& path, const GeometryConfig& cfg) {
  if (path.streamed()) throw LeapError("path_distance needs a stored path");
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < path.params.size(); ++i) {
    const double n = segment_norm({path.params[i], path.losses[i]}, {path.params[i + 1], path.losses[i + 1]},
                                  cfg.include_loss);
    d += raise(n, cfg.p());
  }
  return d;
}

void add_pull_forward_increment(std::span<double> accum, std::span<const double> params, double loss,
                                std::span<const double> grad, std::span<const double> next_params, double next_loss,
                                const GeometryConfig& cfg) {
  if (params.size() != next_params.size() || params.size() != grad.size() || accum.size() != params.size())
    throw LeapError("pull_forward_increment: dimension mismatch");
  const double raw_df = next_loss - loss;
  const double df = cfg.include_loss ? (cfg.stabilize ? -std::abs(raw_df) : raw_df) : 0.0;

  double weight = 1.0;
  if (cfg.p() == 1) {
    const double n = std::sqrt(squared_segment(params, next_params, raw_df, cfg.include_loss));
    if (n < cfg.zero_norm_eps) return;
    weight = 1.0 / n;
  }
  const double scale = -static_cast<double>(cfg.p()) * weight;
  for (std::size_t j = 0; j < params.size(); ++j) accum[j] += scale * (df * grad[j] + (next_params[j] - params[j]));
}

ParamVector pull_forward_increment(std::span<const double> params, double loss, std::span<const double> grad,
                                   std::span<const double> next_params, double next_loss, const GeometryConfig& cfg) {
  ParamVector inc(params.size(), 0.0);
  add_pull_forward_increment(inc, params, loss, grad, next_params, next_loss, cfg);
  return inc;
}

double stabilizer_value(double loss, double next_loss) {
  if (next_loss <= loss) return 0.0;
  const double d = next_loss - loss;
  return -2.0 * d * d;
}

void PullForwardAccumulator::operator()(const Segment& s) {
  add_pull_forward_increment(grad_, s.params, s.loss, s.grad, s.next_params, s.next_loss, cfg_);
  distance_ += raise(segment_norm({s.params, s.loss}, {s.next_params, s.next_loss}, cfg_.include_loss), cfg_.p());
}

}  // namespace leap
