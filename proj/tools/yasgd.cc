// Copyright 2026 The YASGD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: train, simulate, sweep-threshold.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include "yasgd/harness/config.h"
#include "yasgd/harness/metrics.h"
#include "yasgd/harness/run_config.h"
#include "yasgd/harness/sim_io.h"
#include "yasgd/harness/trainer.h"
#include "yasgd/sched/bucket_plan.h"
#include "yasgd/sched/trace.h"
#include "yasgd/sim/simulator.h"

namespace {

using namespace yasgd;

constexpr int kExitFailure = 1;
constexpr int kExitDiverged = 2;

struct TrainArgs {
  std::string config;
  std::optional<int> world_size;
  std::optional<std::string> transport;
  std::optional<std::string> rendezvous;
  std::optional<std::string> bucket_bytes;
  std::optional<std::string> scheduling;
  bool fp16_comm = false;
  std::optional<std::uint64_t> seed;
  std::string log_path;
  std::string csv_path;
  std::string trace_path;
  int rank = -1;
};

std::ofstream OpenOut(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  return f;
}

harness::RunConfig BuildRunConfig(const TrainArgs& a) {
  auto m = harness::ConfigMap::Load(a.config);
  if (a.world_size) m.Set("world_size", std::to_string(*a.world_size));
  if (a.transport) m.Set("transport", *a.transport);
  if (a.rendezvous) m.Set("rendezvous", *a.rendezvous);
  if (a.bucket_bytes) m.Set("bucket_bytes", *a.bucket_bytes);
  if (a.scheduling) m.Set("scheduling", *a.scheduling);
  if (a.fp16_comm) m.Set("fp16_comm", "true");
  if (a.seed) m.Set("seed", std::to_string(*a.seed));
  return harness::ParseRunConfig(m);
}

int Report(const harness::RunResult& r, const TrainArgs& a) {
  if (!a.csv_path.empty()) {
    auto f = OpenOut(a.csv_path);
    harness::WriteMetricsCsv(f, r.metrics);
  }
  if (!a.trace_path.empty() && !r.ranks.empty()) {
    auto f = OpenOut(a.trace_path);
    sched::WriteTrace(f, r.ranks.front().trace);
  }
  fmt::print(stderr, "status={} epochs={} iterations={} elapsed_s={:.3f} images_per_sec={:.1f}", 
             harness::RunStatusName(r.status), r.epochs_completed, r.iterations, r.elapsed_s, r.images_per_sec);
  if (r.final_accuracy) fmt::print(stderr, " final_accuracy={:.5f}", *r.final_accuracy);
  if (!r.message.empty()) fmt::print(stderr, " message=\"{}\"", r.message);
  fmt::print(stderr, "\n");
  return r.status == harness::RunStatus::kSuccess ? 0 : kExitDiverged;
}

int RunTrain(const TrainArgs& a) {
  const auto cfg = BuildRunConfig(a);
  std::ofstream log_file;
  std::ostream* sink = &std::cout;
  if (!a.log_path.empty()) {
    log_file = OpenOut(a.log_path);
    sink = &log_file;
  }
  harness::RunOptions opt;
  opt.log_sink = sink;
  opt.record_trace = !a.trace_path.empty();

  if (a.rank >= 0) return Report(harness::RunRank(cfg, a.rank, opt), a);
  if (cfg.transport == comm::TransportMode::kLoopback || cfg.world_size == 1) {
    return Report(harness::RunTraining(cfg, opt), a);
  }

  // TCP: one process per rank. Children are forked before any thread exists.
  std::vector<pid_t> children;
  for (int r = 1; r < cfg.world_size; ++r) {
    const pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      int code = kExitFailure;
      try {
        harness::RunOptions child_opt;
        child_opt.record_trace = false;
        const auto res = harness::RunRank(cfg, r, child_opt);
        code = res.status == harness::RunStatus::kSuccess ? 0 : kExitDiverged;
      } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
      }
      std::fflush(stderr);
      ::_exit(code);
    }
    children.push_back(pid);
  }
  int code = 0;
  try {
    code = Report(harness::RunRank(cfg, 0, opt), a);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    code = kExitFailure;
  }
  for (pid_t pid : children) {
    int st = 0;
    ::waitpid(pid, &st, 0);
    if (!WIFEXITED(st) || (WEXITSTATUS(st) != 0 && code == 0)) code = WIFEXITED(st) ? WEXITSTATUS(st) : kExitFailure;
  }
  return code;
}

int RunSimulate(const std::string& config, const std::string& csv, const std::string& trace) {
  const auto run = harness::ParseSimConfig(harness::ConfigMap::Load(config));
  const auto rows = sim::ScalabilityCurve(run.config, run.world_sizes);
  if (csv.empty() || csv == "-") {
    harness::WriteScalabilityCsv(std::cout, rows);
  } else {
    auto f = OpenOut(csv);
    harness::WriteScalabilityCsv(f, rows);
  }
  if (!trace.empty()) {
    auto f = OpenOut(trace);
    sched::WriteTrace(f, sim::SimulateIteration(run.config).events);
  }
  return 0;
}

int RunSweep(const std::string& config, const std::vector<std::string>& thresholds, const std::string& csv) {
  const auto run = harness::ParseSimConfig(harness::ConfigMap::Load(config));
  std::vector<std::size_t> ths;
  for (const auto& t : thresholds) {
    for (const auto& item : harness::SplitList(t)) ths.push_back(sched::ParseByteSize(item));
  }
  const auto sweep = sim::ThresholdSweep(run.config, ths);
  if (csv.empty() || csv == "-") {
    harness::WriteSweepCsv(std::cout, sweep.rows);
  } else {
    auto f = OpenOut(csv);
    harness::WriteSweepCsv(f, sweep.rows);
  }
  fmt::print(stderr, "best_threshold_bytes={} iteration_us={:.3f}\n", sweep.best_threshold, sweep.best_iteration_us);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-parallel SGD engine, scalability simulator and log tools"};
  app.require_subcommand(1);

  TrainArgs t;
  auto* train = app.add_subcommand("train", "Run synchronous data-parallel training");
  train->add_option("--config", t.config, "Run config file")->required()->check(CLI::ExistingFile);
  train->add_option("--world-size", t.world_size, "Number of workers")->check(CLI::PositiveNumber);
  train->add_option("--transport", t.transport, "loopback or tcp");
  train->add_option("--rendezvous", t.rendezvous, "HOST:PORT where rank 0 listens (tcp)");
  train->add_option("--bucket-bytes", t.bucket_bytes, "Group threshold, e.g. 4MiB or inf");
  train->add_option("--scheduling", t.scheduling, "static, dynamic-allgather or none");
  train->add_flag("--fp16-comm", t.fp16_comm, "Send gradients as binary16");
  train->add_option("--seed", t.seed, "Init and shuffle seed");
  train->add_option("--log", t.log_path, "MLPerf log file (default stdout)");
  train->add_option("--csv", t.csv_path, "Per-iteration metrics CSV");
  train->add_option("--trace", t.trace_path, "Rank 0 scheduling trace");
  train->add_option("--rank", t.rank, "Run only this rank (tcp)")->group("");

  std::string sim_config;
  std::string sim_csv;
  std::string sim_trace;
  auto* simulate = app.add_subcommand("simulate", "Scalability curve from the cost model");
  simulate->add_option("--config", sim_config, "Simulator config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--csv", sim_csv, "Output CSV (default stdout)");
  simulate->add_option("--trace", sim_trace, "Event trace at sim.world_size");

  std::string sweep_config;
  std::vector<std::string> sweep_thresholds;
  std::string sweep_csv;
  auto* sweep = app.add_subcommand("sweep-threshold", "Iteration time across group thresholds");
  sweep->add_option("--config", sweep_config, "Simulator config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--thresholds", sweep_thresholds, "Comma-separated list, e.g. 64KiB,1MiB,4MiB,inf")
      ->required()
      ->delimiter(',');
  sweep->add_option("--csv", sweep_csv, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return RunTrain(t);
    if (*simulate) return RunSimulate(sim_config, sim_csv, sim_trace);
    if (*sweep) return RunSweep(sweep_config, sweep_thresholds, sweep_csv);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
