// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "leap/checkpoint.hpp"
#include "leap/commands.hpp"

namespace fs = std::filesystem;
using namespace leap;

namespace {

/// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("leap_cli_test_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& rel) const { return (dir / rel).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "leap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

const char* kQuadratic = R"(experiment:
  seeds: [1, 2]
  methods: [leap, reptile, none]
tasks:
  family: quadratic
  count: 6
  step_budget: 8
  full_batch: true
  update:
    lr: 0.5
  quadratic:
    dim: 3
heldout:
  count: 3
  eval_steps: 5
meta:
  p: 2
  beta: 0.01
  batch_size: 3
  steps: 12
)";

const char* kSinusoid = R"(experiment:
  seeds: [3]
  methods: [leap, reptile, fomaml, finetune, none]
tasks:
  family: sinusoid_mlp
  count: 8
  step_budget: 4
  batch_size: 5
  sinusoid:
    hidden: 6
heldout:
  count: 2
  eval_steps: 4
meta:
  beta: 0.01
  batch_size: 4
  steps: 6
)";

}  // namespace

TEST_CASE("checkpoint round trip and corruption checks") {
  Scratch s("ckpt");
  const Checkpoint c{MetaMethod::reptile, 42, 17, 0xfeedULL, {1.5, -0.25, 1e-300}};
  write_checkpoint(s / "a.bin", c);
  const auto back = read_checkpoint(s / "a.bin");
  CHECK(back.method == MetaMethod::reptile);
  CHECK(back.seed == 42);
  CHECK(back.meta_step == 17);
  CHECK(back.config_hash == 0xfeedULL);
  CHECK(back.theta0 == c.theta0);
  CHECK(fs::file_size(s / "a.bin") == 48 + 8 * 3);

  const std::string bytes = slurp(s / "a.bin");
  write(s / "trunc.bin", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(s / "trunc.bin"), LeapError);
  write(s / "magic.bin", "NOTACKPT" + bytes.substr(8));
  CHECK_THROWS_AS(read_checkpoint(s / "magic.bin"), LeapError);
  CHECK_THROWS_AS(read_checkpoint(s / "missing.bin"), LeapError);
}

TEST_CASE("train writes one history row per meta step and a checkpoint") {
  Scratch s("train");
  write(s / "q.yaml", kQuadratic);
  REQUIRE(run({"train", "--config", s / "q.yaml", "--out", s / "out"}) == 0);
  for (std::string seed : {"1", "2"}) {
    const auto hist = slurp(s / ("out/leap/seed_" + seed + "/history.csv"));
    CHECK(hist.rfind("method,seed,meta_step,", 0) == 0);
    CHECK(count_lines(hist) == 1 + 12);
    CHECK(count_lines(slurp(s / ("out/none/seed_" + seed + "/history.csv"))) == 1);
    const auto ck = read_checkpoint(s / ("out/leap/seed_" + seed + "/checkpoint.bin"));
    CHECK(ck.theta0.size() == 3);
    CHECK(ck.meta_step == 12);
    CHECK(fs::exists(s / ("out/leap/seed_" + seed + "/timing.csv")));
  }
}

TEST_CASE("rerunning train is byte-identical across thread counts and streaming") {
  Scratch s("determinism");
  write(s / "s.yaml", kSinusoid);
  REQUIRE(run({"train", "--config", s / "s.yaml", "--out", s / "a", "--threads", "1"}) == 0);
  REQUIRE(run({"train", "--config", s / "s.yaml", "--out", s / "b", "--threads", "4"}) == 0);
  REQUIRE(run({"train", "--config", s / "s.yaml", "--out", s / "c", "--threads", "2", "--streaming"}) == 0);
  for (std::string m : {"leap", "reptile", "fomaml", "finetune", "none"}) {
    CAPTURE(m);
    const auto rel = m + "/seed_3/";
    CHECK(slurp(s / ("a/" + rel + "history.csv")) == slurp(s / ("b/" + rel + "history.csv")));
    CHECK(slurp(s / ("a/" + rel + "history.csv")) == slurp(s / ("c/" + rel + "history.csv")));
    CHECK(slurp(s / ("a/" + rel + "checkpoint.bin")) == slurp(s / ("b/" + rel + "checkpoint.bin")));
  }
}

TEST_CASE("evaluate writes the record CSV and a summary") {
  Scratch s("evaluate");
  write(s / "q.yaml", kQuadratic);
  REQUIRE(run({"train", "--config", s / "q.yaml", "--out", s / "out"}) == 0);
  std::string out;
  REQUIRE(run({"evaluate", "--config", s / "q.yaml", "--out", s / "out"}, &out) == 0);
  const auto csv = slurp(s / "out/evaluation.csv");
  CHECK(csv.rfind("method,seed,task,step,loss,error,auc\n", 0) == 0);
  // 3 methods x 2 seeds x 3 tasks x (5 + 1) steps.
  CHECK(count_lines(csv) == 1 + 3 * 2 * 3 * 6);
  const auto summary = slurp(s / "out/evaluation_summary.csv");
  CHECK(summary.rfind("method,runs,auc_mean,auc_std,final_error_mean,final_error_std\n", 0) == 0);
  CHECK(count_lines(summary) == 4);
  CHECK(out.find("leap: AUC") != std::string::npos);
}

TEST_CASE("a zero-step checkpoint evaluates like no pretraining") {
  Scratch s("zerostep");
  std::string text = kQuadratic;
  text.replace(text.find("steps: 12"), 9, "steps: 0");
  write(s / "q.yaml", text);
  REQUIRE(run({"train", "--config", s / "q.yaml", "--out", s / "out", "--seed", "2"}) == 0);
  REQUIRE(run({"evaluate", "--config", s / "q.yaml", "--out", s / "leap",
               "--checkpoint", s / "out/leap/seed_2/checkpoint.bin"}) == 0);
  REQUIRE(run({"evaluate", "--config", s / "q.yaml", "--out", s / "none",
               "--checkpoint", s / "out/none/seed_2/checkpoint.bin"}) == 0);
  auto strip = [](std::string csv) {
    std::string outp;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) outp += line.substr(line.find(',')) + "\n";
    return outp;
  };
  CHECK(strip(slurp(s / "leap/evaluation.csv")) == strip(slurp(s / "none/evaluation.csv")));
}

TEST_CASE("exit codes") {
  Scratch s("codes");
  std::string err;
  write(s / "bad.yaml", "tasks:\n  family: hexagon\n");
  CHECK(run({"train", "--config", s / "bad.yaml", "--out", s / "o"}, nullptr, &err) == cli::kConfigError);
  CHECK(err.find("tasks.family") != std::string::npos);
  CHECK(run({"train", "--config", s / "missing.yaml"}) == cli::kConfigError);
  CHECK(run({"verify", "nope"}) == cli::kConfigError);
  CHECK(run({"frobnicate"}) == cli::kConfigError);
  CHECK(run({}) == cli::kConfigError);

  write(s / "q.yaml", kQuadratic);
  write(s / "s.yaml", kSinusoid);
  REQUIRE(run({"train", "--config", s / "q.yaml", "--out", s / "q", "--seed", "1"}) == 0);
  CHECK(run({"evaluate", "--config", s / "s.yaml", "--out", s / "e", "--checkpoint", s / "q/leap/seed_1/checkpoint.bin"},
            nullptr, &err) == cli::kConfigError);
  CHECK(err.find("parameters") != std::string::npos);

  // A step size far beyond 2 / lambda_max diverges in every task.
  std::string diverging = kQuadratic;
  diverging.replace(diverging.find("lr: 0.5"), 7, "lr: 50.0");
  diverging.replace(diverging.find("step_budget: 8"), 14, "step_budget: 40");
  write(s / "div.yaml", diverging);
  CHECK(run({"train", "--config", s / "div.yaml", "--out", s / "d"}, nullptr, &err) == cli::kNumericalError);
}

TEST_CASE("verify prints a JSON report") {
  Scratch s("verify");
  std::string out;
  REQUIRE(run({"verify", "jacobian", "--out", s / "r"}, &out) == 0);
  const auto j = nlohmann::json::parse(out);
  CHECK(j["suite"] == "jacobian");
  CHECK(j["passed"] == true);
  for (const auto& c : j["checks"]) {
    CHECK(c.contains("check_name"));
    CHECK(c.contains("status"));
    CHECK(c.contains("max_error"));
    CHECK(c.contains("tolerance"));
    CHECK(c.contains("seeds"));
  }
  CHECK(fs::exists(s / "r/verify_jacobian.json"));
}

TEST_CASE("ablate emits eight labelled histories") {
  Scratch s("ablate");
  write(s / "a.yaml", R"(experiment:
  seeds: [1, 2, 3]
tasks:
  family: sinusoid_mlp
  count: 5
  step_budget: 3
  sinusoid:
    hidden: 4
meta:
  beta: 0.001
  batch_size: 2
  steps: 5
)");
  REQUIRE(run({"ablate", "--config", s / "a.yaml", "--out", s / "o"}) == 0);
  const auto csv = slurp(s / "o/ablation.csv");
  CHECK(count_lines(csv) == 1 + 8 * 5);
  CHECK(count_lines(slurp(s / "o/ablation_summary.csv")) == 9);
  CHECK(csv.find("\"p=2,mu=1,f=0\"") != std::string::npos);
  write(s / "two.yaml", "experiment:\n  seeds: [1, 2]\ntasks:\n  family: quadratic\n");
  CHECK(run({"ablate", "--config", s / "two.yaml", "--out", s / "o2"}) == cli::kConfigError);
}

TEST_CASE("the installed executable runs") {
  Scratch s("binary");
  const std::string cmd = std::string(LEAP_CLI_PATH) + " verify reptile_reduction > " + (s / "out.json");
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(nlohmann::json::parse(slurp(s / "out.json"))["passed"] == true);
  const std::string bad = std::string(LEAP_CLI_PATH) + " verify nope 2> /dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}

TEST_CASE("number formatting and summary statistics") {
  CHECK(cli::format_double(0.1) == "0.1");
  CHECK(cli::format_double(1e-300) == "1e-300");
  CHECK(cli::format_double(std::nan("")) == "nan");
  const auto [m, sd] = cli::mean_std({1.0, 2.0, 3.0});
  CHECK(m == 2.0);
  CHECK(sd == 1.0);
  CHECK(cli::mean_std({4.0}).second == 0.0);
}
