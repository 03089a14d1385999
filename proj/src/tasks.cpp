// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace leap {

namespace {

constexpr double kPi = 3.141592653589793;

// ---------------------------------------------------------------------------
// MLP with one tanh hidden layer. Parameter layout:
//   W1 [hidden x inputs] | b1 [hidden] | W2 [outputs x hidden] | b2 [outputs]
// ---------------------------------------------------------------------------

enum class Head { mse, logistic };

struct MlpResult {
  double loss = 0.0;
  double errors = 0.0;
};

template <typename Fn>
void for_each_index(const DataBatch& batch, std::size_t dataset_size, Fn&& fn) {
  if (batch.full) {
    for (std::size_t i = 0; i < dataset_size; ++i) fn(i);
  } else {
    for (std::uint32_t i : batch.indices) fn(i);
  }
}

MlpResult mlp_eval(const MlpShape& shape, Head head, const Dataset& data, std::span<const double> theta,
                   const DataBatch& batch, double* grad) {
  const int in = shape.inputs;
  const int hid = shape.hidden;
  const int out = shape.outputs;
  const double* w1 = theta.data();
  const double* b1 = w1 + hid * in;
  const double* w2 = b1 + hid;
  const double* b2 = w2 + out * hid;

  double* gw1 = grad;
  double* gb1 = grad ? gw1 + hid * in : nullptr;
  double* gw2 = grad ? gb1 + hid : nullptr;
  double* gb2 = grad ? gw2 + out * hid : nullptr;
  if (grad) std::fill(grad, grad + shape.param_count(), 0.0);

  const std::size_t n = batch.full ? data.size() : batch.indices.size();
  const double inv_n = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);

  std::vector<double> h(static_cast<std::size_t>(hid));
  std::vector<double> dy(static_cast<std::size_t>(out));
  std::vector<double> dh(static_cast<std::size_t>(hid));
  MlpResult res;

  for_each_index(batch, data.size(), [&](std::size_t s) {
    const double* x = data.inputs.data() + s * static_cast<std::size_t>(in);
    const double* t = data.targets.data() + s * static_cast<std::size_t>(out);
    for (int j = 0; j < hid; ++j) {
      double a = b1[j];
      for (int k = 0; k < in; ++k) a += w1[j * in + k] * x[k];
      h[j] = std::tanh(a);
    }
    for (int o = 0; o < out; ++o) {
      double z = b2[o];
      for (int j = 0; j < hid; ++j) z += w2[o * hid + j] * h[j];
      if (head == Head::mse) {
        const double r = z - t[o];
        res.loss += r * r * inv_n;
        dy[o] = 2.0 * r * inv_n;
      } else {
        // Numerically stable binary cross-entropy with logits.
        res.loss += (std::max(z, 0.0) - z * t[o] + std::log1p(std::exp(-std::abs(z)))) * inv_n;
        const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        dy[o] = (p - t[o]) * inv_n;
        const bool predicted = z > 0.0;
        if (predicted != (t[o] > 0.5)) res.errors += inv_n;
      }
    }
    if (!grad) return;
    for (int o = 0; o < out; ++o) {
      gb2[o] += dy[o];
      for (int j = 0; j < hid; ++j) gw2[o * hid + j] += dy[o] * h[j];
    }
    for (int j = 0; j < hid; ++j) {
      double back = 0.0;
      for (int o = 0; o < out; ++o) back += w2[o * hid + j] * dy[o];
      dh[j] = back * (1.0 - h[j] * h[j]);
      gb1[j] += dh[j];
      for (int k = 0; k < in; ++k) gw1[j * in + k] += dh[j] * x[k];
    }
  });
  return res;
}

std::shared_ptr<const Dataset> build_dataset(const TaskParams& params, std::uint64_t seed) {
  auto data = std::make_shared<Dataset>();
  Rng rng(derive_seed(seed, 0xda7aULL));
  if (const auto* s = std::get_if<SinusoidSpec>(&params)) {
    data->input_dim = 1;
    data->output_dim = 1;
    std::uniform_real_distribution<double> ux(-5.0, 5.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < s->dataset_size; ++i) {
      const double x = ux(rng);
      double y = s->amplitude * std::sin(x - s->phase);
      if (s->noise_std > 0.0) y += s->noise_std * noise(rng);
      data->inputs.push_back(x);
      data->targets.push_back(y);
    }
  } else if (const auto* c = std::get_if<ClassifySpec>(&params)) {
    data->input_dim = 2;
    data->output_dim = 1;
    std::normal_distribution<double> g(0.0, 1.0);
    const double dx = 0.5 * c->separation * std::cos(c->angle);
    const double dy = 0.5 * c->separation * std::sin(c->angle);
    for (int i = 0; i < c->dataset_size; ++i) {
      const int label = i % 2;
      const double sign = label == 1 ? 1.0 : -1.0;
      data->inputs.push_back(c->offset_x + sign * dx + c->spread * g(rng));
      data->inputs.push_back(c->offset_y + sign * dy + c->spread * g(rng));
      data->targets.push_back(static_cast<double>(label));
    }
  }
  return data;
}

void check_dimension(const Task& task, std::span<const double> theta) {
  if (theta.size() != task.param_count())
    throw LeapError("parameter dimension " + std::to_string(theta.size()) + " does not match task dimension " +
                    std::to_string(task.param_count()));
}

}  // namespace

std::string_view to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::quadratic: return "quadratic";
    case TaskFamily::sinusoid_mlp: return "sinusoid_mlp";
    case TaskFamily::synth_classify: return "synth_classify";
  }
  return "unknown";
}

TaskFamily parse_task_family(std::string_view name) {
  if (name == "quadratic") return TaskFamily::quadratic;
  if (name == "sinusoid_mlp" || name == "sinusoid") return TaskFamily::sinusoid_mlp;
  if (name == "synth_classify" || name == "classify") return TaskFamily::synth_classify;
  throw ConfigError("unknown task family '" + std::string(name) + "'");
}

void QuadraticSpec::validate() const {
  const std::size_t n = center.size();
  if (n == 0) throw ConfigError("quadratic: empty center");
  if (hessian.rows() != n || hessian.cols() != n) throw ConfigError("quadratic: Hessian shape does not match center");
  if (!all_finite(hessian.data()) || !all_finite(center)) throw ConfigError("quadratic: non-finite entries");
  if (linalg::asymmetry(hessian) > 1e-12) throw ConfigError("quadratic: Hessian is not symmetric");
  if (n <= 64) {
    const auto eig = linalg::symmetric_eigen(hessian);
    if (eig.values.front() <= 0.0) throw ConfigError("quadratic: Hessian is not positive-definite");
  }
}

void MlpShape::validate() const {
  if (inputs <= 0 || hidden <= 0 || outputs <= 0) throw ConfigError("mlp: layer sizes must be positive");
}

void SinusoidSpec::validate() const {
  if (!(amplitude >= 0.1 && amplitude <= 5.0)) throw ConfigError("sinusoid: amplitude must lie in [0.1, 5.0]");
  if (!std::isfinite(phase)) throw ConfigError("sinusoid: non-finite phase");
  if (noise_std < 0.0) throw ConfigError("sinusoid: noise_std must be >= 0");
  if (dataset_size < 1) throw ConfigError("sinusoid: dataset_size must be >= 1");
  model.validate();
  if (model.inputs != 1 || model.outputs != 1) throw ConfigError("sinusoid: model must map 1 input to 1 output");
}

void ClassifySpec::validate() const {
  if (!(separation >= 0.0) || !(spread > 0.0)) throw ConfigError("classify: separation >= 0 and spread > 0 required");
  if (dataset_size < 2) throw ConfigError("classify: dataset_size must be >= 2");
  model.validate();
  if (model.inputs != 2 || model.outputs != 1) throw ConfigError("classify: model must map 2 inputs to 1 output");
}

Task::Task(TaskParams params, std::uint64_t data_seed, TaskOptions options)
    : params_(std::move(params)), data_seed_(data_seed), options_(std::move(options)) {
  std::visit([](const auto& p) { p.validate(); }, params_);
  if (options_.step_budget < 1) throw ConfigError("step_budget must be >= 1");
  if (options_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  options_.rule.validate(param_count());
  data_ = build_dataset(params_, data_seed_);
}

TaskFamily Task::family() const {
  switch (params_.index()) {
    case 0: return TaskFamily::quadratic;
    case 1: return TaskFamily::sinusoid_mlp;
    default: return TaskFamily::synth_classify;
  }
}

std::size_t Task::param_count() const {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, QuadraticSpec>)
          return p.dim();
        else
          return p.model.param_count();
      },
      params_);
}

DataBatch Task::sample_batch(Rng& rng) const {
  if (options_.full_batch || family() == TaskFamily::quadratic) return full_data();
  DataBatch b;
  b.full = false;
  b.indices.resize(static_cast<std::size_t>(options_.batch_size));
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(data_->size() - 1));
  for (auto& i : b.indices) i = pick(rng);
  return b;
}

Task Task::with_options(TaskOptions options) const {
  Task t = *this;
  if (options.step_budget < 1) throw ConfigError("step_budget must be >= 1");
  if (options.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  options.rule.validate(param_count());
  t.options_ = std::move(options);
  return t;
}

LossGrad loss_and_grad(const Task& task, std::span<const double> theta, const DataBatch& batch) {
  check_dimension(task, theta);
  LossGrad out;
  out.grad.assign(theta.size(), 0.0);
  if (const auto* q = std::get_if<QuadraticSpec>(&task.params())) {
    const auto diff = subtract(theta, q->center);
    out.grad = linalg::multiply(q->hessian, diff);
    out.loss = 0.5 * dot(diff, out.grad);
  } else if (const auto* s = std::get_if<SinusoidSpec>(&task.params())) {
    out.loss = mlp_eval(s->model, Head::mse, task.dataset(), theta, batch, out.grad.data()).loss;
  } else {
    const auto& c = std::get<ClassifySpec>(task.params());
    out.loss = mlp_eval(c.model, Head::logistic, task.dataset(), theta, batch, out.grad.data()).loss;
  }
  if (!std::isfinite(out.loss) || !all_finite(out.grad)) throw NumericalError("non-finite loss or gradient");
  return out;
}

double loss_only(const Task& task, std::span<const double> theta, const DataBatch& batch) {
  check_dimension(task, theta);
  if (const auto* q = std::get_if<QuadraticSpec>(&task.params())) {
    const auto diff = subtract(theta, q->center);
    return 0.5 * dot(diff, linalg::multiply(q->hessian, diff));
  }
  if (const auto* s = std::get_if<SinusoidSpec>(&task.params()))
    return mlp_eval(s->model, Head::mse, task.dataset(), theta, batch, nullptr).loss;
  const auto& c = std::get<ClassifySpec>(task.params());
  return mlp_eval(c.model, Head::logistic, task.dataset(), theta, batch, nullptr).loss;
}

double training_error(const Task& task, std::span<const double> theta, const DataBatch& batch) {
  if (const auto* c = std::get_if<ClassifySpec>(&task.params())) {
    check_dimension(task, theta);
    return mlp_eval(c->model, Head::logistic, task.dataset(), theta, batch, nullptr).errors;
  }
  return loss_only(task, theta, batch);
}

ParamVector initial_parameters(const Task& task, Rng& rng, double scale) {
  const auto* shape = std::visit(
      [](const auto& p) -> const MlpShape* {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, QuadraticSpec>)
          return nullptr;
        else
          return &p.model;
      },
      task.params());
  if (!shape) return ParamVector(task.param_count(), 0.0);

  ParamVector theta(shape->param_count(), 0.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const int in = shape->inputs;
  const int hid = shape->hidden;
  const int out = shape->outputs;
  // W ~ N(0, scale^2 / fan_in), biases of the hidden layer ~ N(0, scale^2), output bias 0.
  std::size_t k = 0;
  for (int i = 0; i < hid * in; ++i) theta[k++] = scale * g(rng) / std::sqrt(static_cast<double>(in));
  for (int i = 0; i < hid; ++i) theta[k++] = scale * g(rng);
  for (int i = 0; i < out * hid; ++i) theta[k++] = scale * g(rng) / std::sqrt(static_cast<double>(hid));
  return theta;
}

std::size_t TaskDistribution::param_count() const { return tasks.empty() ? 0 : tasks.front().param_count(); }

std::vector<Task> sample_task_batch(const TaskDistribution& dist, int count, Rng& rng) {
  if (dist.empty()) throw ConfigError("task distribution is empty");
  if (count < 1) throw ConfigError("task batch size must be >= 1");
  std::vector<Task> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::size_t n = dist.tasks.size();
  if (dist.mode == SamplingMode::with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int i = 0; i < count; ++i) out.push_back(dist.tasks[pick(rng)]);
    return out;
  }
  if (static_cast<std::size_t>(count) > n)
    throw ConfigError("sampling without replacement: batch size exceeds number of tasks");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
    out.push_back(dist.tasks[order[i]]);
  }
  return out;
}

std::vector<Task> make_sinusoid_tasks(int count, std::uint64_t seed, const SinusoidFamily& family,
                                      const TaskOptions& options) {
  Rng rng(derive_seed(seed, 0x5157ULL));
  std::uniform_real_distribution<double> amp(family.amplitude_min, family.amplitude_max);
  std::uniform_real_distribution<double> phase(family.phase_min, family.phase_max);
  std::vector<Task> tasks;
  for (int i = 0; i < count; ++i) {
    SinusoidSpec spec;
    spec.amplitude = amp(rng);
    spec.phase = phase(rng);
    spec.model = family.model;
    spec.noise_std = family.noise_std;
    spec.dataset_size = family.dataset_size;
    tasks.emplace_back(spec, derive_seed(seed, static_cast<std::uint64_t>(i)), options);
  }
  return tasks;
}

std::vector<Task> make_classify_tasks(int count, std::uint64_t seed, const ClassifyFamily& family,
                                      const TaskOptions& options) {
  Rng rng(derive_seed(seed, 0xc1a5ULL));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> offset(-family.offset_range, family.offset_range);
  std::vector<Task> tasks;
  for (int i = 0; i < count; ++i) {
    ClassifySpec spec;
    spec.angle = angle(rng);
    spec.separation = family.separation;
    spec.spread = family.spread;
    spec.offset_x = offset(rng);
    spec.offset_y = offset(rng);
    spec.model = family.model;
    spec.dataset_size = family.dataset_size;
    tasks.emplace_back(spec, derive_seed(seed, static_cast<std::uint64_t>(i)), options);
  }
  return tasks;
}

std::vector<Task> make_quadratic_tasks(int count, std::uint64_t seed, const QuadraticFamily& family,
                                       const TaskOptions& options) {
  if (family.dim < 1) throw ConfigError("quadratic: dim must be >= 1");
  if (!(family.eigen_min > 0.0) || family.eigen_max < family.eigen_min)
    throw ConfigError("quadratic: need 0 < eigen_min <= eigen_max");
  const auto n = static_cast<std::size_t>(family.dim);
  Rng rng(derive_seed(seed, 0x9dadULL));
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> eig(family.eigen_min, family.eigen_max);
  std::uniform_real_distribution<double> ctr(-family.center_range, family.center_range);
  std::vector<Task> tasks;
  for (int t = 0; t < count; ++t) {
    // Random orthogonal basis by Gram-Schmidt on a Gaussian matrix.
    linalg::Matrix q(n, n);
    for (double& v : q.data()) v = g(rng);
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t prev = 0; prev < c; ++prev) {
        double d = 0.0;
        for (std::size_t r = 0; r < n; ++r) d += q(r, c) * q(r, prev);
        for (std::size_t r = 0; r < n; ++r) q(r, c) -= d * q(r, prev);
      }
      double nrm = 0.0;
      for (std::size_t r = 0; r < n; ++r) nrm += q(r, c) * q(r, c);
      nrm = std::sqrt(nrm);
      for (std::size_t r = 0; r < n; ++r) q(r, c) /= nrm;
    }
    std::vector<double> spectrum(n);
    for (auto& v : spectrum) v = eig(rng);
    linalg::Matrix a = q * linalg::Matrix::diagonal(spectrum) * q.transpose();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
    ParamVector c(n);
    for (auto& v : c) v = ctr(rng);
    tasks.emplace_back(QuadraticSpec{std::move(a), std::move(c)}, derive_seed(seed, static_cast<std::uint64_t>(t)),
                       options);
  }
  return tasks;
}

Task make_quadratic_task(linalg::Matrix hessian, ParamVector center, double lr, int steps) {
  TaskOptions opts;
  opts.rule = UpdateRule::constant(lr);
  opts.step_budget = steps;
  opts.batch_size = 1;
  opts.full_batch = true;
  return Task(QuadraticSpec{std::move(hessian), std::move(center)}, 0, opts);
}

}  // namespace leap
