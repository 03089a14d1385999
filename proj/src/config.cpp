// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <yaml-cpp/yaml.h>

namespace leap {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

/// Mapping node whose keys are checked against an allow-list.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(path_ + ": expected a mapping", line_of(node_));
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'", line_of(kv.first));
    }
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }
  YAML::Node node(const std::string& key) const { return node_[key]; }
  std::string path(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    const YAML::Node n = node_[key];
    if (!n) return fallback;
    return as<T>(n, path(key));
  }

  template <typename T>
  static T as(const YAML::Node& n, const std::string& where) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where + ": invalid value", line_of(n));
    }
  }

  template <typename T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) const {
    const YAML::Node n = node_[key];
    if (!n) return fallback;
    if (!n.IsSequence()) throw ConfigError(path(key) + ": expected a list", line_of(n));
    std::vector<T> out;
    for (const auto& item : n) out.push_back(as<T>(item, path(key)));
    return out;
  }

  int line(const std::string& key) const { return line_of(node_[key]); }
  int line() const { return line_of(node_); }

 private:
  YAML::Node node_;
  std::string path_;
};

/// Wraps a validation call so its message carries the line of `s`.
template <typename Fn>
void at_line(const Section& s, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    if (e.line() > 0) throw;
    throw ConfigError(e.what(), s.line());
  }
}

std::pair<double, double> range(const Section& s, const std::string& key, std::pair<double, double> fallback) {
  const auto v = s.list<double>(key, {fallback.first, fallback.second});
  if (v.size() != 2 || v[0] > v[1]) throw ConfigError(s.path(key) + ": expected [min, max]", s.line(key));
  return {v[0], v[1]};
}

UpdateRule parse_update(const Section& s) {
  UpdateRule rule;
  const auto schedule = s.get<std::string>("schedule", "constant");
  const double lr = s.get<double>("lr", 0.01);
  if (schedule == "constant") {
    rule.schedule = ConstantSchedule{lr};
  } else if (schedule == "cosine") {
    rule.schedule = CosineSchedule{lr, s.get<int>("period", 100)};
  } else {
    throw ConfigError(s.path("schedule") + ": unknown schedule '" + schedule + "'", s.line("schedule"));
  }
  if (s.has("preconditioner")) rule.preconditioner = DiagonalPreconditioner{s.list<double>("preconditioner", {})};
  at_line(s, [&] { rule.validate(); });
  return rule;
}

MlpShape parse_hidden(const Section& s, MlpShape shape) {
  shape.hidden = s.get<int>("hidden", shape.hidden);
  at_line(s, [&] { shape.validate(); });
  return shape;
}

void parse_tasks(const YAML::Node& node, TaskSpec& t) {
  Section s(node, "tasks",
            {"family", "count", "seed", "sampling", "step_budget", "batch_size", "full_batch", "update", "sinusoid",
             "classify", "quadratic", "quadratics"});
  if (!s.has("family")) throw ConfigError("tasks: missing key 'family'", s.line());
  const auto family = s.get<std::string>("family", "");
  try {
    t.family = parse_task_family(family);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("tasks.family: ") + e.what(), s.line("family"));
  }
  t.count = s.get<int>("count", t.count);
  t.seed = s.get<std::uint64_t>("seed", t.seed);
  const auto sampling = s.get<std::string>("sampling", "with_replacement");
  if (sampling == "with_replacement") {
    t.sampling = SamplingMode::with_replacement;
  } else if (sampling == "without_replacement") {
    t.sampling = SamplingMode::without_replacement;
  } else {
    throw ConfigError("tasks.sampling: unknown sampling mode '" + sampling + "'", s.line("sampling"));
  }
  t.options.step_budget = s.get<int>("step_budget", t.options.step_budget);
  t.options.batch_size = s.get<int>("batch_size", t.options.batch_size);
  t.options.full_batch = s.get<bool>("full_batch", t.options.full_batch);
  if (t.options.step_budget < 1) throw ConfigError("tasks.step_budget: must be >= 1", s.line("step_budget"));
  if (t.options.batch_size < 1) throw ConfigError("tasks.batch_size: must be >= 1", s.line("batch_size"));
  if (s.has("update")) t.options.rule = parse_update(Section(s.node("update"), "tasks.update",
                                                             {"schedule", "lr", "period", "preconditioner"}));

  if (s.has("sinusoid")) {
    Section f(s.node("sinusoid"), "tasks.sinusoid", {"amplitude", "phase", "hidden", "noise_std", "dataset_size"});
    std::tie(t.sinusoid.amplitude_min, t.sinusoid.amplitude_max) =
        range(f, "amplitude", {t.sinusoid.amplitude_min, t.sinusoid.amplitude_max});
    std::tie(t.sinusoid.phase_min, t.sinusoid.phase_max) =
        range(f, "phase", {t.sinusoid.phase_min, t.sinusoid.phase_max});
    t.sinusoid.model = parse_hidden(f, t.sinusoid.model);
    t.sinusoid.noise_std = f.get<double>("noise_std", t.sinusoid.noise_std);
    t.sinusoid.dataset_size = f.get<int>("dataset_size", t.sinusoid.dataset_size);
  }
  if (s.has("classify")) {
    Section f(s.node("classify"), "tasks.classify", {"separation", "spread", "offset_range", "hidden", "dataset_size"});
    t.classify.separation = f.get<double>("separation", t.classify.separation);
    t.classify.spread = f.get<double>("spread", t.classify.spread);
    t.classify.offset_range = f.get<double>("offset_range", t.classify.offset_range);
    t.classify.model = parse_hidden(f, t.classify.model);
    t.classify.dataset_size = f.get<int>("dataset_size", t.classify.dataset_size);
  }
  if (s.has("quadratic")) {
    Section f(s.node("quadratic"), "tasks.quadratic", {"dim", "eigen_min", "eigen_max", "center_range"});
    t.quadratic.dim = f.get<int>("dim", t.quadratic.dim);
    t.quadratic.eigen_min = f.get<double>("eigen_min", t.quadratic.eigen_min);
    t.quadratic.eigen_max = f.get<double>("eigen_max", t.quadratic.eigen_max);
    t.quadratic.center_range = f.get<double>("center_range", t.quadratic.center_range);
  }
  if (s.has("quadratics")) {
    const YAML::Node list = s.node("quadratics");
    if (!list.IsSequence()) throw ConfigError("tasks.quadratics: expected a list", s.line("quadratics"));
    for (const auto& item : list) {
      Section q(item, "tasks.quadratics[]", {"hessian", "center"});
      std::vector<std::vector<double>> rows;
      const YAML::Node h = q.node("hessian");
      if (!h || !h.IsSequence()) throw ConfigError("tasks.quadratics[].hessian: expected a list of rows", q.line());
      for (const auto& r : h) rows.push_back(Section::as<std::vector<double>>(r, "tasks.quadratics[].hessian"));
      QuadraticSpec spec;
      try {
        spec.hessian = linalg::Matrix::from_rows(rows);
      } catch (const LeapError& e) {
        throw ConfigError(std::string("tasks.quadratics[].hessian: ") + e.what(), line_of(h));
      }
      spec.center = q.list<double>("center", {});
      at_line(q, [&] { spec.validate(); });
      t.explicit_quadratics.push_back(std::move(spec));
    }
    if (t.family != TaskFamily::quadratic)
      throw ConfigError("tasks.quadratics: only valid with family quadratic", s.line("quadratics"));
    t.count = static_cast<int>(t.explicit_quadratics.size());
  }
  if (t.count < 1) throw ConfigError("tasks.count: must be >= 1", s.line("count"));
}

void parse_meta(const YAML::Node& node, ExperimentConfig& c) {
  Section s(node, "meta",
            {"p", "include_loss", "stabilize", "beta", "batch_size", "steps", "optimizer", "adam", "reptile_epsilon",
             "fomaml_lr", "init", "init_scale", "early_stop_grad_norm", "snapshot_every"});
  MetaConfig& m = c.meta;
  const int p = s.get<int>("p", m.geometry.p());
  if (p != 1 && p != 2) throw ConfigError("meta.p: must be 1 or 2", s.line("p"));
  m.geometry.kind = p == 1 ? DistanceKind::length : DistanceKind::energy;
  m.geometry.include_loss = s.get<bool>("include_loss", m.geometry.include_loss);
  m.geometry.stabilize = s.get<bool>("stabilize", m.geometry.stabilize);
  m.beta = s.get<double>("beta", m.beta);
  m.batch_size = s.get<int>("batch_size", m.batch_size);
  m.meta_steps = s.get<int>("steps", m.meta_steps);
  m.reptile_epsilon = s.get<double>("reptile_epsilon", m.reptile_epsilon);
  m.fomaml_lr = s.get<double>("fomaml_lr", m.fomaml_lr);
  m.early_stop_grad_norm = s.get<double>("early_stop_grad_norm", m.early_stop_grad_norm);
  m.snapshot_every = s.get<int>("snapshot_every", m.snapshot_every);
  const auto opt = s.get<std::string>("optimizer", "sgd");
  if (opt == "sgd") {
    m.optimizer = SgdMeta{};
  } else if (opt == "adam") {
    AdamMeta a;
    if (s.has("adam")) {
      Section as(s.node("adam"), "meta.adam", {"lr", "beta1", "beta2", "eps"});
      a.lr = as.get<double>("lr", a.lr);
      a.beta1 = as.get<double>("beta1", a.beta1);
      a.beta2 = as.get<double>("beta2", a.beta2);
      a.eps = as.get<double>("eps", a.eps);
    }
    m.optimizer = a;
  } else {
    throw ConfigError("meta.optimizer: unknown optimizer '" + opt + "'", s.line("optimizer"));
  }
  const auto init = s.get<std::string>("init", "random");
  if (init == "random") {
    c.init = InitMode::random;
  } else if (init == "zeros") {
    c.init = InitMode::zeros;
  } else {
    throw ConfigError("meta.init: unknown init '" + init + "'", s.line("init"));
  }
  c.init_scale = s.get<double>("init_scale", c.init_scale);
  at_line(s, [&] { m.validate(); });
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("experiment.seeds: must not be empty");
  if (methods.empty()) throw ConfigError("experiment.methods: must not be empty");
  if (heldout && heldout->count < 1) throw ConfigError("heldout.count: must be >= 1");
  if (heldout && heldout->eval_steps < 1) throw ConfigError("heldout.eval_steps: must be >= 1");
  if (tasks.sampling == SamplingMode::without_replacement && meta.batch_size > tasks.count)
    throw ConfigError("meta.batch_size exceeds tasks.count under sampling without replacement");
  meta.validate();
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  if (!root || !root.IsMap()) throw ConfigError("config: expected a mapping at top level", 1);
  Section top(root, "config", {"experiment", "tasks", "heldout", "meta"});
  ExperimentConfig c;
  c.hash = fnv1a(text);

  if (top.has("experiment")) {
    Section e(top.node("experiment"), "experiment", {"name", "seeds", "output", "methods"});
    c.name = e.get<std::string>("name", c.name);
    c.seeds = e.list<std::uint64_t>("seeds", c.seeds);
    if (c.seeds.empty()) throw ConfigError("experiment.seeds: must not be empty", e.line("seeds"));
    c.output = e.get<std::string>("output", c.output);
    if (e.has("methods")) {
      c.methods.clear();
      for (const auto& name : e.list<std::string>("methods", {})) {
        try {
          c.methods.push_back(parse_meta_method(name));
        } catch (const ConfigError& err) {
          throw ConfigError(std::string("experiment.methods: ") + err.what(), e.line("methods"));
        }
      }
      if (c.methods.empty()) throw ConfigError("experiment.methods: must not be empty", e.line("methods"));
    }
  }
  if (!top.has("tasks")) throw ConfigError("config: missing section 'tasks'", 1);
  parse_tasks(top.node("tasks"), c.tasks);
  if (top.has("heldout")) {
    Section h(top.node("heldout"), "heldout", {"count", "seed", "eval_steps"});
    HeldoutSpec spec;
    spec.count = h.get<int>("count", spec.count);
    spec.seed = h.get<std::uint64_t>("seed", spec.seed);
    spec.eval_steps = h.get<int>("eval_steps", spec.eval_steps);
    if (spec.count < 1) throw ConfigError("heldout.count: must be >= 1", h.line("count"));
    if (spec.eval_steps < 1) throw ConfigError("heldout.eval_steps: must be >= 1", h.line("eval_steps"));
    c.heldout = spec;
  }
  if (top.has("meta")) parse_meta(top.node("meta"), c);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::vector<Task> build_tasks(const TaskSpec& t, int count, std::uint64_t seed) {
  switch (t.family) {
    case TaskFamily::sinusoid_mlp: return make_sinusoid_tasks(count, seed, t.sinusoid, t.options);
    case TaskFamily::synth_classify: return make_classify_tasks(count, seed, t.classify, t.options);
    case TaskFamily::quadratic: {
      if (t.explicit_quadratics.empty()) return make_quadratic_tasks(count, seed, t.quadratic, t.options);
      std::vector<Task> tasks;
      for (std::size_t i = 0; i < t.explicit_quadratics.size(); ++i)
        tasks.emplace_back(t.explicit_quadratics[i], derive_seed(seed, i), t.options);
      return tasks;
    }
  }
  throw ConfigError("unknown task family");
}

}  // namespace

TaskDistribution build_distribution(const ExperimentConfig& cfg, std::uint64_t seed) {
  return TaskDistribution{build_tasks(cfg.tasks, cfg.tasks.count, derive_seed(cfg.tasks.seed, seed)),
                          cfg.tasks.sampling};
}

std::vector<Task> build_heldout(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.heldout) throw ConfigError("config has no heldout section");
  const int count = cfg.tasks.explicit_quadratics.empty() ? cfg.heldout->count : cfg.tasks.count;
  return build_tasks(cfg.tasks, count, derive_seed(cfg.heldout->seed, seed));
}

ParamVector initial_theta(const ExperimentConfig& cfg, const TaskDistribution& dist, std::uint64_t seed) {
  if (cfg.init == InitMode::zeros) return ParamVector(dist.param_count(), 0.0);
  Rng rng(derive_seed(seed, 0x1417ULL));
  return initial_parameters(dist.tasks.front(), rng, cfg.init_scale);
}

}  // namespace leap
