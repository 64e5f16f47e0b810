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

#include "yasgd/harness/trainer.h"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <future>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/core.h>

#include "yasgd/comm/allreduce.h"
#include "yasgd/harness/mlperf_log.h"
#include "yasgd/model/dataset.h"
#include "yasgd/model/mlp.h"
#include "yasgd/optim/lars.h"
#include "yasgd/sched/group_scheduler.h"

namespace yasgd::harness {

const char* RunStatusName(RunStatus s) {
  switch (s) {
    case RunStatus::kSuccess: return "success";
    case RunStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;
using sched::EventKind;

// Single background thread that runs communication tasks in submission
// order, so at most one collective is in flight per worker.
class CommThread {
 public:
  CommThread() : thread_([this] { Run(); }) {}
  ~CommThread() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }

  std::future<void> Submit(std::function<void()> fn) {
    std::packaged_task<void()> task(std::move(fn));
    auto fut = task.get_future();
    {
      std::lock_guard<std::mutex> lock(mu_);
      queue_.push_back(std::move(task));
    }
    cv_.notify_one();
    return fut;
  }

 private:
  void Run() {
    std::unique_lock<std::mutex> lock(mu_);
    while (true) {
      cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      auto task = std::move(queue_.front());
      queue_.pop_front();
      lock.unlock();
      task();  // exceptions land in the future
      lock.lock();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::packaged_task<void()>> queue_;
  bool stop_ = false;
  std::thread thread_;
};

// Flags exchanged at every epoch end.
enum EpochFlag { kNonFiniteLoss = 0, kStop = 1, kNumEpochFlags = 2 };

// Iteration ids for epoch-end exchanges live above any training iteration.
constexpr std::uint64_t kEpochExchangeBase = std::uint64_t{1} << 62;

std::string BatchNormValue(const RunConfig& cfg) {
  return fmt::format("{{\"momentum\": {}, \"epsilon\": {}, \"center\": true, \"scale\": true, \"training\": true}}",
                     cfg.bn_momentum, cfg.bn_epsilon);
}

void LogRunStart(MlperfLogger& log, const RunConfig& cfg) {
  log.Event("eval_offset", cfg.eval_offset);
  log.Event("run_start");
  log.Event("run_set_random_seed", static_cast<std::int64_t>(cfg.seed));
}

struct Rank0Output {
  std::vector<EvalPoint> evals;
  std::vector<MetricsRow> metrics;
  bool target_reached = false;
  double loop_seconds = 0.0;
  std::uint64_t images = 0;
};

class Worker {
 public:
  Worker(const RunConfig& cfg, const RunOptions& opt, comm::Communicator comm, MlperfLogger* log)
      : cfg_(cfg),
        opt_(opt),
        comm_(std::move(comm)),
        log_(log),
        model_(cfg.model),
        rank_(comm_.rank()),
        world_(comm_.world_size()),
        local_blocks_(cfg.effective_grad_blocks() / world_),
        block_size_(cfg.global_batch() / static_cast<std::size_t>(cfg.effective_grad_blocks())) {}

  // Returns the status; fills `out`.
  RunStatus Run(RankOutcome& out, Rank0Output& r0, std::string& message) {
    params_ = model::InitParams(cfg_.model, cfg_.seed);
    out.initial_params = params_;
    bn_ = model_.MakeBatchNormStates(cfg_.bn_momentum, cfg_.bn_epsilon);
    mom_ = optim::MakeMomentumState(params_, cfg_.momentum);
    schedule_ = cfg_.Schedule();
    train_ = model::GenerateDataset(cfg_.train_data);
    if (rank_ == 0) eval_batch_ = model::GenerateDataset(cfg_.eval_data).All();
    if (log_ && model_.spec().num_hidden() > 0) {
      for (bool bn : model_.spec().use_batchnorm) {
        if (bn) log_->Event("model_hp_batch_norm", BatchNormValue(cfg_));
      }
    }
    out.startup_counters = comm_.transport->counters();

    const std::size_t bpe = cfg_.fp16_comm ? 2 : 4;
    plan_ = sched::MakeBuckets(*model_.layout(), cfg_.bucket_bytes, bpe);
    out.plan = plan_;
    out.segment_bytes.resize(model_.layout()->num_segments());
    for (std::size_t s = 0; s < out.segment_bytes.size(); ++s) {
      out.segment_bytes[s] = model_.layout()->segment(s).len * bpe;
    }
    block_grads_.assign(static_cast<std::size_t>(local_blocks_), model::FlatGrads(model_.layout()));
    sum_ = model::FlatGrads(model_.layout());
    avg_ = model::FlatGrads(model_.layout());

    RunStatus status = RunStatus::kSuccess;
    if (log_) log_->Event("train_loop");
    const auto loop_start = Clock::now();
    std::int64_t global_iter = 0;
    for (int epoch = 0; epoch < cfg_.epochs && status == RunStatus::kSuccess; ++epoch) {
      if (log_) log_->Event("train_epoch", epoch);
      const auto shard = model::Shard(cfg_.train_data.n, cfg_.seed, static_cast<std::uint64_t>(epoch), rank_,
                                      world_, cfg_.batch_per_rank);
      bool nonfinite_loss = false;
      for (std::size_t it = 0; it < shard.iterations(); ++it, ++global_iter) {
        const auto t0 = Clock::now();
        const int ranks_with_data = model::RanksWithData(cfg_.train_data.n, world_, cfg_.batch_per_rank, it);
        double loss = 0.0;
        try {
          loss = Iterate(global_iter, shard.batches[it], ranks_with_data);
        } catch (const std::domain_error&) {
          status = RunStatus::kDiverged;
          message = fmt::format("non-finite gradient at iteration {}", global_iter);
          break;
        }
        if (!std::isfinite(loss)) nonfinite_loss = true;
        if (rank_ == 0) {
          const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
          const auto imgs = static_cast<double>(ranks_with_data) * static_cast<double>(cfg_.batch_per_rank);
          r0.images += static_cast<std::uint64_t>(imgs);
          r0.metrics.push_back({epoch, global_iter, optim::LrAt(schedule_, global_iter), loss, std::nullopt,
                                secs > 0.0 ? imgs / secs : 0.0});
        }
      }
      if (status != RunStatus::kSuccess) break;

      bool stop = false;
      if (rank_ == 0 && (epoch % cfg_.eval_period == cfg_.eval_offset || epoch == cfg_.epochs - 1)) {
        if (log_) log_->Event("eval_start");
        const double acc = Evaluate();
        r0.evals.push_back({epoch, acc});
        r0.metrics.push_back({epoch, global_iter, std::nullopt, std::nullopt, acc, std::nullopt});
        if (log_) {
          log_->Event("eval_accuracy", EvalAccuracyValue(epoch, acc));
          log_->Event("eval_stop");
        }
        if (cfg_.target_accuracy && acc >= *cfg_.target_accuracy) {
          r0.target_reached = true;
          stop = true;
        }
      }
      std::vector<bool> flags(kNumEpochFlags, false);
      flags[kNonFiniteLoss] = nonfinite_loss;
      flags[kStop] = stop;
      comm_thread_.Submit([&] { exchanged_ = comm::AllgatherFlags(comm_, flags, kEpochExchangeBase + epoch); })
          .get();
      if (exchanged_.any(kNonFiniteLoss)) {
        status = RunStatus::kDiverged;
        message = fmt::format("non-finite loss in epoch {}", epoch);
      }
      if (exchanged_.any(kStop)) break;
    }
    r0.loop_seconds = std::chrono::duration<double>(Clock::now() - loop_start).count();

    out.rank = rank_;
    out.params = params_;
    out.bn = bn_;
    out.final_counters = comm_.transport->counters();
    out.trace = trace_.events();
    return status;
  }

  void Abort(const std::string& reason) { comm_.transport->Abort(reason); }

 private:
  void Record(EventKind kind, std::uint64_t iter, int id = -1, std::uint64_t bytes = 0) {
    if (opt_.record_trace) trace_.Record(kind, iter, id, bytes);
  }

  double Evaluate() {
    const auto pred = model_.Predict(params_, bn_, eval_batch_);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == eval_batch_.labels[i];
    return static_cast<double>(correct) / static_cast<double>(pred.size());
  }

  // Packs group g of every local block, sums across ranks and unpacks into sum_.
  void ReduceGroup(int g, std::uint64_t iter, int blocks_with_data) {
    const auto& group = plan_.groups[static_cast<std::size_t>(g)];
    Record(EventKind::kAllreduceStart, iter, g, group.bytes);
    const auto& layout = *model_.layout();
    std::size_t len = 0;
    for (int m : group.members) len += layout.segment(static_cast<std::size_t>(m)).len;
    packed_.resize(static_cast<std::size_t>(blocks_with_data));
    std::vector<std::span<const float>> parts;
    for (int b = 0; b < blocks_with_data; ++b) {
      auto& buf = packed_[static_cast<std::size_t>(b)];
      buf.resize(len);
      std::size_t off = 0;
      for (int m : group.members) {
        const auto seg = block_grads_[static_cast<std::size_t>(b)].segment(static_cast<std::size_t>(m));
        std::copy(seg.begin(), seg.end(), buf.begin() + static_cast<long>(off));
        off += seg.size();
      }
      parts.emplace_back(buf);
    }
    reduced_.resize(len);
    comm::AllreduceOptions o;
    o.dtype = cfg_.fp16_comm ? comm::DType::kF16 : comm::DType::kF32;
    o.order = cfg_.allreduce_order;
    o.iteration = iter;
    o.group = static_cast<std::uint32_t>(g);
    comm::Allreduce(comm_, parts, reduced_, o);
    std::size_t off = 0;
    for (int m : group.members) {
      auto seg = sum_.segment(static_cast<std::size_t>(m));
      std::copy(reduced_.begin() + static_cast<long>(off), reduced_.begin() + static_cast<long>(off + seg.size()),
                seg.begin());
      off += seg.size();
    }
    Record(EventKind::kAllreduceEnd, iter, g, group.bytes);
  }

  // Static and none modes: hand finished segments to the scheduler and
  // submit every group it releases.
  void Launch(const sched::GroupScheduler::Update& u, std::uint64_t iter, int blocks_with_data,
              std::vector<std::future<void>>& pending) {
    for (int g : u.ready) Record(EventKind::kGroupReady, iter, g, plan_.groups[static_cast<std::size_t>(g)].bytes);
    for (int g : u.launch) {
      pending.push_back(comm_thread_.Submit([this, g, iter, blocks_with_data] { ReduceGroup(g, iter, blocks_with_data); }));
    }
  }

  // Dynamic mode: agree on which groups every rank has finished through a
  // flag allgather, then reduce the newly agreed groups in order.
  void SubmitReadinessRound(std::vector<bool> local_ready, std::uint64_t iter, int blocks_with_data,
                            std::vector<std::future<void>>& pending) {
    pending.push_back(comm_thread_.Submit([this, local_ready = std::move(local_ready), iter, blocks_with_data] {
      const auto summary = comm::AllgatherFlags(comm_, local_ready, iter);
      for (std::size_t g = 0; g < local_ready.size(); ++g) {
        if (summary.all(g) && !agreed_[g]) {
          agreed_[g] = true;
          Record(EventKind::kGroupReady, iter, static_cast<int>(g), plan_.groups[g].bytes);
          for (int launch : global_sched_->MarkGroupReady(static_cast<int>(g)).launch) {
            ReduceGroup(launch, iter, blocks_with_data);
          }
        }
      }
    }));
  }

  // One synchronous step. Returns this rank's mean loss over its blocks
  // (zero when it holds no data this iteration).
  double Iterate(std::int64_t iter_signed, const std::vector<std::size_t>& indices, int ranks_with_data) {
    const auto iter = static_cast<std::uint64_t>(iter_signed);
    const bool has_data = !indices.empty();
    const int blocks = has_data ? local_blocks_ : 0;
    const int total_blocks = ranks_with_data * local_blocks_;
    sched::GroupScheduler local(plan_);
    std::vector<std::future<void>> pending;
    if (cfg_.scheduling == Scheduling::kDynamicAllgather) {
      global_sched_.emplace(plan_);
      agreed_.assign(plan_.groups.size(), false);
    }
    auto local_ready = [&] {
      std::vector<bool> r(plan_.groups.size(), false);
      for (std::size_t g = 0; g < r.size(); ++g) {
        bool all = true;
        for (int m : plan_.groups[g].members) all = all && segment_done_[static_cast<std::size_t>(m)];
        r[g] = all;
      }
      return r;
    };
    segment_done_.assign(model_.layout()->num_segments(), false);
    std::vector<int> deferred;  // none mode: segments reported after backward

    auto on_segments = [&](const std::vector<int>& segs) {
      for (int s : segs) {
        segment_done_[static_cast<std::size_t>(s)] = true;
        Record(EventKind::kBackwardDone, iter, s);
        if (cfg_.scheduling == Scheduling::kStatic) {
          Launch(local.OnBackwardDone(s), iter, blocks, pending);
        } else if (cfg_.scheduling == Scheduling::kNone) {
          deferred.push_back(s);
        }
      }
      if (cfg_.scheduling == Scheduling::kDynamicAllgather) {
        SubmitReadinessRound(local_ready(), iter, blocks, pending);
      }
    };

    double loss = 0.0;
    try {
      if (has_data) {
        for (int b = 0; b < blocks; ++b) {
          const auto begin = indices.begin() + static_cast<long>(static_cast<std::size_t>(b) * block_size_);
          const std::vector<std::size_t> idx(begin, begin + static_cast<long>(block_size_));
          const auto batch = train_.Gather(idx);
          auto fwd = model_.Forward<float>(params_, bn_, batch, model::Mode::kTrain, cfg_.label_smoothing);
          loss += static_cast<double>(fwd.loss);
          model::BackwardPass<float> pass(model_, fwd.cache, block_grads_[static_cast<std::size_t>(b)]);
          const bool last = b + 1 == blocks;
          while (!pass.done()) {
            const auto segs = pass.Step();
            if (last) on_segments(segs);
          }
        }
        loss /= blocks;
      } else {
        // No local data: this rank contributes nothing and its layers count
        // as finished from the start.
        segment_done_.assign(segment_done_.size(), true);
        const auto order = model_.layout()->BackwardOrder();
        if (cfg_.scheduling == Scheduling::kDynamicAllgather) {
          for (int l = 0; l < model_.num_layers(); ++l) SubmitReadinessRound(local_ready(), iter, 0, pending);
        } else {
          for (int s : order) {
            Record(EventKind::kBackwardDone, iter, s);
            if (cfg_.scheduling == Scheduling::kStatic) {
              Launch(local.OnBackwardDone(s), iter, 0, pending);
            } else {
              deferred.push_back(s);
            }
          }
        }
      }
      for (int s : deferred) Launch(local.OnBackwardDone(s), iter, blocks, pending);
    } catch (...) {
      // Peers may be waiting on this rank; fail the fabric before draining.
      comm_.transport->Abort(fmt::format("rank {} failed during backward", rank_));
      for (auto& f : pending) f.wait();
      throw;
    }
    std::exception_ptr err;
    for (auto& f : pending) {
      try {
        f.get();
      } catch (...) {
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    if (cfg_.scheduling == Scheduling::kDynamicAllgather ? !global_sched_->all_launched() : !local.all_launched()) {
      throw std::logic_error("not every gradient group was reduced");
    }

    const float denom = static_cast<float>(total_blocks);
    for (std::size_t i = 0; i < avg_.values.size(); ++i) avg_.values[i] = sum_.values[i] / denom;
    optim::SgdStep(params_, avg_, mom_, schedule_, cfg_.lars, iter_signed);
    Record(EventKind::kStepApplied, iter);
    return loss;
  }

  const RunConfig& cfg_;
  const RunOptions& opt_;
  comm::Communicator comm_;
  MlperfLogger* log_;
  model::Mlp model_;
  int rank_;
  int world_;
  int local_blocks_;
  std::size_t block_size_;

  model::FlatParams params_;
  std::vector<model::BatchNormState> bn_;
  optim::MomentumState mom_;
  optim::LrSchedule schedule_;
  model::Dataset train_;
  model::Batch eval_batch_;
  sched::BucketPlan plan_;

  std::vector<model::FlatGrads> block_grads_;
  model::FlatGrads sum_;
  model::FlatGrads avg_;
  std::vector<bool> segment_done_;
  // Touched only by the comm thread while an iteration runs.
  std::vector<std::vector<float>> packed_;
  std::vector<float> reduced_;
  std::optional<sched::GroupScheduler> global_sched_;
  std::vector<bool> agreed_;
  comm::FlagSummary exchanged_;

  sched::TraceRecorder trace_;
  CommThread comm_thread_;  // last member: joins before the state above goes away
};

comm::BootstrapOptions MakeBootstrap(const RunConfig& cfg, const RunOptions& opt, int rank,
                                     std::shared_ptr<comm::LoopbackHub> hub) {
  comm::BootstrapOptions b;
  b.mode = cfg.transport;
  b.world_size = cfg.world_size;
  b.rank = rank;
  b.hub = std::move(hub);
  b.rendezvous = cfg.rendezvous;
  b.timeout = opt.bootstrap_timeout;
  return b;
}

void Finish(RunResult& result, const Rank0Output& r0, MlperfLogger& log, const LogTimestamp& start) {
  result.evals = r0.evals;
  result.metrics = r0.metrics;
  result.target_reached = r0.target_reached;
  for (const auto& e : r0.evals) {
    result.best_accuracy = std::max(result.best_accuracy.value_or(0.0), e.accuracy);
  }
  if (!r0.evals.empty()) result.final_accuracy = r0.evals.back().accuracy;
  result.iterations = 0;
  for (const auto& m : r0.metrics) {
    if (m.lr) ++result.iterations;
  }
  result.images_per_sec = r0.loop_seconds > 0.0 ? static_cast<double>(r0.images) / r0.loop_seconds : 0.0;
  if (result.status == RunStatus::kSuccess) {
    log.Event("run_stop");
  } else {
    log.Event("run_stop", std::optional<std::string>("{\"success\": false}"));
  }
  log.Event("run_final");
  const auto lines = log.lines();
  result.log_lines = lines;
  if (!lines.empty()) {
    result.elapsed_s = ParseLog(lines).elapsed_s;
  } else {
    result.elapsed_s = LogTimestamp::Now().SecondsSince(start);
  }
}

struct WorkerResult {
  RunStatus status = RunStatus::kSuccess;
  std::string message;
  RankOutcome outcome;
  Rank0Output r0;
};

// Bootstraps and runs one rank; `abort` is set as soon as the transport
// exists so other threads can cancel it.
void RunOne(const RunConfig& cfg, const RunOptions& opt, int rank, std::shared_ptr<comm::LoopbackHub> hub,
            MlperfLogger* log, WorkerResult& out) {
  auto comm = comm::Bootstrap(MakeBootstrap(cfg, opt, rank, std::move(hub)));
  Worker w(cfg, opt, std::move(comm), log);
  try {
    out.status = w.Run(out.outcome, out.r0, out.message);
  } catch (const std::exception& e) {
    w.Abort(fmt::format("rank {} failed: {}", rank, e.what()));
    throw;
  }
}

}  // namespace

RunResult RunTraining(const RunConfig& cfg, const RunOptions& opt) {
  cfg.Validate();
  MlperfLogger log(cfg.model_name, true, opt.log_sink);
  const auto start = LogTimestamp::Now();
  LogRunStart(log, cfg);

  const int p = cfg.world_size;
  std::shared_ptr<comm::LoopbackHub> hub;
  if (cfg.transport == comm::TransportMode::kLoopback) hub = std::make_shared<comm::LoopbackHub>(p);
  std::vector<WorkerResult> results(static_cast<std::size_t>(p));
  std::mutex err_mu;
  std::string first_error;
  std::vector<std::thread> threads;
  for (int r = 0; r < p; ++r) {
    threads.emplace_back([&, r] {
      try {
        RunOne(cfg, opt, r, hub, r == 0 ? &log : nullptr, results[static_cast<std::size_t>(r)]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first_error.empty()) first_error = fmt::format("rank {}: {}", r, e.what());
        if (hub) hub->Abort(first_error);
      }
    });
  }
  for (auto& t : threads) t.join();
  if (!first_error.empty()) throw std::runtime_error(first_error);

  RunResult result;
  for (const auto& w : results) {
    if (w.status != RunStatus::kSuccess) {
      result.status = w.status;
      if (result.message.empty()) result.message = w.message;
    }
  }
  result.epochs_completed = cfg.epochs;
  Finish(result, results[0].r0, log, start);
  if (result.target_reached) result.epochs_completed = result.evals.back().epoch + 1;
  for (auto& w : results) result.ranks.push_back(std::move(w.outcome));
  return result;
}

RunResult RunRank(const RunConfig& cfg, int rank, const RunOptions& opt) {
  cfg.Validate();
  if (rank < 0 || rank >= cfg.world_size) throw std::invalid_argument(fmt::format("rank {} out of range", rank));
  if (cfg.transport != comm::TransportMode::kTcp && cfg.world_size > 1) {
    throw std::invalid_argument("a single rank per process needs the tcp transport");
  }
  MlperfLogger log(cfg.model_name, rank == 0, opt.log_sink);
  const auto start = LogTimestamp::Now();
  LogRunStart(log, cfg);
  std::shared_ptr<comm::LoopbackHub> hub;
  if (cfg.transport == comm::TransportMode::kLoopback) hub = std::make_shared<comm::LoopbackHub>(1);
  WorkerResult w;
  try {
    RunOne(cfg, opt, rank, hub, rank == 0 ? &log : nullptr, w);
  } catch (const std::exception& e) {
    throw std::runtime_error(fmt::format("rank {}: {}", rank, e.what()));
  }
  RunResult result;
  result.status = w.status;
  result.message = w.message;
  result.epochs_completed = cfg.epochs;
  Finish(result, w.r0, log, start);
  if (result.target_reached) result.epochs_completed = result.evals.back().epoch + 1;
  result.ranks.push_back(std::move(w.outcome));
  return result;
}

}  // namespace yasgd::harness
