// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "leap/checkpoint.hpp"
#include "leap/config.hpp"
#include "leap/log.hpp"
#include "leap/verify.hpp"

namespace fs = std::filesystem;

namespace leap::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

namespace {

struct Loaded {
  ExperimentConfig cfg;
  fs::path out;
};

Loaded load(const Options& opts) {
  if (opts.config.empty()) throw ConfigError("--config is required");
  Loaded l{load_config(opts.config), {}};
  if (opts.seed) l.cfg.seeds = {*opts.seed};
  if (opts.threads < 1) throw ConfigError("--threads must be >= 1");
  l.cfg.meta.threads = opts.threads;
  l.cfg.meta.streaming = opts.streaming;
  l.out = opts.out.empty() ? fs::path(l.cfg.output) : fs::path(opts.out);
  return l;
}

fs::path run_dir(const fs::path& out, MetaMethod m, std::uint64_t seed) {
  return out / std::string(to_string(m)) / ("seed_" + std::to_string(seed));
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw LeapError("cannot write '" + p.string() + "'");
  return f;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? std::string(1, sep) : "") + parts[i];
  return s;
}

/// Maps library exceptions onto exit codes; runs `fn` otherwise.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}

void write_history(const fs::path& path, MetaMethod method, std::uint64_t seed, const MetaRun& run) {
  auto f = open_out(path);
  f << "method,seed,meta_step,mean_distance,mean_loss,final_loss,mean_error,grad_norm,dropped\n";
  for (const auto& r : run.history)
    f << to_string(method) << ',' << seed << ',' << r.step << ',' << format_double(r.mean_distance) << ','
      << format_double(r.mean_loss) << ',' << format_double(r.final_loss) << ',' << format_double(r.mean_error)
      << ',' << format_double(r.grad_norm) << ',' << r.dropped.size() << '\n';
}

}  // namespace

int cmd_train(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto [cfg, dir] = load(opts);
    for (auto seed : cfg.seeds) {
      const auto dist = build_distribution(cfg, seed);
      const auto theta0 = initial_theta(cfg, dist, seed);
      for (auto method : cfg.methods) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto run = run_meta(method, dist, cfg.meta, theta0, seed);
        const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const auto rd = run_dir(dir, method, seed);
        write_history(rd / "history.csv", method, seed, run);
        const auto steps = static_cast<std::uint64_t>(run.history.size());
        write_checkpoint((rd / "checkpoint.bin").string(), Checkpoint{method, seed, steps, cfg.hash, run.theta0});
        for (const auto& [step, params] : run.snapshots)
          write_checkpoint((rd / ("snapshot_" + std::to_string(step) + ".bin")).string(),
                           Checkpoint{method, seed, static_cast<std::uint64_t>(step), cfg.hash, params});
        auto timing = open_out(rd / "timing.csv");
        timing << "method,seed,wall_ms\n" << to_string(method) << ',' << seed << ',' << format_double(ms) << '\n';
        const double last = run.history.empty() ? std::numeric_limits<double>::quiet_NaN() : run.history.back().mean_loss;
        out << to_string(method) << " seed " << seed << ": " << run.history.size() << " meta steps, mean loss "
            << format_double(last) << " -> " << rd.string() << "\n";
      }
    }
    return static_cast<int>(kOk);
  });
}

int cmd_evaluate(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto [cfg, dir] = load(opts);
    if (!cfg.heldout) throw ConfigError("evaluate needs a heldout section in the config");

    struct Job {
      Checkpoint ckpt;
      std::uint64_t seed;
    };
    std::vector<Job> jobs;
    if (!opts.checkpoint.empty()) {
      auto c = read_checkpoint(opts.checkpoint);
      const auto seed = opts.seed.value_or(c.seed);
      jobs.push_back({std::move(c), seed});
    } else {
      for (auto seed : cfg.seeds)
        for (auto m : cfg.methods) {
          const auto p = run_dir(dir, m, seed) / "checkpoint.bin";
          if (!fs::exists(p)) throw ConfigError("missing checkpoint '" + p.string() + "'; run train first");
          jobs.push_back({read_checkpoint(p.string()), seed});
        }
    }

    auto csv = open_out(dir / "evaluation.csv");
    csv << "method,seed,task,step,loss,error,auc\n";
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> aucs, finals;
    for (const auto& job : jobs) {
      const auto heldout = build_heldout(cfg, job.seed);
      if (job.ckpt.theta0.size() != heldout.front().param_count())
        throw ConfigError("checkpoint has " + std::to_string(job.ckpt.theta0.size()) +
                          " parameters but the held-out tasks need " + std::to_string(heldout.front().param_count()));
      if (job.ckpt.config_hash != cfg.hash) log_warn("checkpoint was trained with a different config");
      const auto records = evaluate_transfer(job.ckpt.theta0, heldout, cfg.heldout->eval_steps, job.seed, opts.threads);
      const std::string method(to_string(job.ckpt.method));
      if (!aucs.count(method)) order.push_back(method);
      for (const auto& r : records) {
        if (r.diverged) {
          log_warn(method + " seed " + std::to_string(job.seed) + " task " + std::to_string(r.task_index) +
                   " diverged: " + r.message);
          csv << method << ',' << job.seed << ',' << r.task_index << ",0,nan,nan,nan\n";
          continue;
        }
        for (std::size_t s = 0; s < r.losses.size(); ++s)
          csv << method << ',' << job.seed << ',' << r.task_index << ',' << s << ',' << format_double(r.losses[s])
              << ',' << format_double(r.errors[s]) << ',' << format_double(r.auc) << '\n';
      }
      aucs[method].push_back(mean_auc(records));
      double fe = 0.0;
      std::size_t n = 0;
      for (const auto& r : records)
        if (!r.diverged) fe += r.final_error, ++n;
      finals[method].push_back(n ? fe / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN());
    }

    auto summary = open_out(dir / "evaluation_summary.csv");
    summary << "method,runs,auc_mean,auc_std,final_error_mean,final_error_std\n";
    for (const auto& m : order) {
      const auto [am, as] = mean_std(aucs[m]);
      const auto [fm, fsd] = mean_std(finals[m]);
      summary << m << ',' << aucs[m].size() << ',' << format_double(am) << ',' << format_double(as) << ','
              << format_double(fm) << ',' << format_double(fsd) << '\n';
      out << m << ": AUC " << am << " ± " << as << ", final error " << fm << " ± " << fsd << " (" << aucs[m].size()
          << " runs)\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_verify(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.threads < 1) throw ConfigError("--threads must be >= 1");
    const auto report = verify::run_suite(opts.suite, opts.threads);
    const auto json = report.to_json();
    out << json << "\n";
    if (!opts.out.empty()) {
      auto f = open_out(fs::path(opts.out) / ("verify_" + opts.suite + ".json"));
      f << json << "\n";
    }
    for (const auto& c : report.checks)
      if (!c.passed) err << "check failed: " << c.name << " (max_error " << c.max_error << ", tolerance "
                         << c.tolerance << ")\n";
    return static_cast<int>(report.passed() ? kOk : kCheckFailed);
  });
}

int cmd_ablate(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto [cfg, dir] = load(opts);
    if (cfg.seeds.size() < 3) throw ConfigError("ablate needs at least 3 seeds");
    // One shared distribution: the ablation compares geometries, not task draws.
    const auto dist = build_distribution(cfg, cfg.seeds.front());
    const auto result = verify::run_ablation(dist, cfg.meta, cfg.seeds);

    auto csv = open_out(dir / "ablation.csv");
    csv << "cell,p,stabilize,include_loss,meta_step,mean_loss\n";
    for (const auto& c : result.cells)
      for (std::size_t s = 0; s < c.mean_loss.size(); ++s)
        csv << '"' << c.label() << "\"," << c.p << ',' << c.stabilize << ',' << c.include_loss << ',' << s << ','
            << format_double(c.mean_loss[s]) << '\n';

    auto summary = open_out(dir / "ablation_summary.csv");
    summary << "cell,auc,diverged_seeds\n";
    for (const auto& c : result.cells) {
      std::vector<std::string> div;
      for (auto s : c.diverged) div.push_back(std::to_string(s));
      summary << '"' << c.label() << "\"," << format_double(c.auc) << ",\"" << join(div, ' ') << "\"\n";
      out << c.label() << ": loss AUC " << format_double(c.auc)
          << (div.empty() ? "" : ", diverged seeds " + join(div, ' ')) << "\n";
    }
    return static_cast<int>(kOk);
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leap: meta-learning initializations by shortening gradient paths"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "experiment config (YAML)");
    if (needs_config) c->required();
    sub->add_option("--seed", seed, "run a single seed instead of experiment.seeds");
    sub->add_option("--out", o.out, "output directory (overrides experiment.output)");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--streaming", o.streaming, "accumulate meta-gradients without storing inner paths");
  };
  auto* train = app.add_subcommand("train", "meta-train every configured method and seed");
  add_common(train, true);
  auto* evaluate = app.add_subcommand("evaluate", "score checkpoints on held-out tasks");
  add_common(evaluate, true);
  evaluate->add_option("--checkpoint", o.checkpoint, "evaluate this checkpoint only");
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", o.suite, "one of: " + join({verify::kSuites.begin(), verify::kSuites.end()}, ' '))
      ->required();
  verify->add_option("--out", o.out, "directory for the JSON report");
  verify->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  auto* ablate = app.add_subcommand("ablate", "geometry ablation over p, stabilizer and loss dimension");
  add_common(ablate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }
  for (auto* sub : {train, evaluate, ablate})
    if (sub->parsed() && sub->count("--seed")) o.seed = seed;

  if (train->parsed()) return cmd_train(o, out, err);
  if (evaluate->parsed()) return cmd_evaluate(o, out, err);
  if (verify->parsed()) return cmd_verify(o, out, err);
  return cmd_ablate(o, out, err);
}

}  // namespace leap::cli
