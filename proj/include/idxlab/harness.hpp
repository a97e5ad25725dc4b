#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idxlab/config.hpp"
#include "idxlab/search.hpp"
#include "idxlab/stats.hpp"
#include "idxlab/workload.hpp"

namespace idxlab {

struct TrainingLogRow {
  int64_t step = 0;
  double loss = 0.0;
  double actor_objective = 0.0;  // SPG only
  double epsilon = 0.0;
  size_t buffer_size = 0;
};

/// Per-query decision maker driven by the episode loop. Implementations own
/// their encoders, networks and exploration state.
class Policy {
 public:
  virtual ~Policy() = default;

  /// Indices to build for this query; empty means no-op. Called once per step.
  virtual std::vector<Index> act(const Query& query, const IndexSet& context) = 0;
  /// Reward for the preceding act(); learners update here.
  virtual void observe(double reward) { (void)reward; }
  virtual void end_episode() {}

  virtual void begin_training(int64_t total_steps) { (void)total_steps; }
  void set_frozen(bool frozen) { frozen_ = frozen; }
  bool frozen() const { return frozen_; }

  virtual const std::vector<TrainingLogRow>& training_log() const { return empty_log_; }
  virtual nlohmann::json checkpoint_params() const;
  virtual void restore_params(const nlohmann::json& j);

 protected:
  bool frozen_ = false;

 private:
  static const std::vector<TrainingLogRow> empty_log_;
};

std::unique_ptr<Policy> make_policy(AgentKind kind, const RunConfig& cfg,
                                    const TableSchema& schema, const Converter& converter);

/// Shared pieces of the simulated environment.
struct EnvContext {
  const TableSchema& schema;
  const Converter& converter;
  CostModelParams cost_params;
  RewardParams reward_params;
  int pointer_width = 8;
};

/// Runs the episode loop over `workloads`: reset context per workload, then per
/// query encode/act/build/execute/reward/observe. Returns one record per step.
std::vector<StepRecord> run_episodes(Policy& policy, const std::vector<Workload>& workloads,
                                     const EnvContext& env,
                                     std::vector<bool>* query_has_range = nullptr,
                                     std::vector<IndexSet>* final_sets = nullptr);

struct EvalOutcome {
  EvalSummary summary;
  std::vector<StepRecord> build_records;
  std::vector<double> final_latencies;             // second pass, pooled over workloads
  std::vector<StepRecord> final_pass_records;      // one per query, latency fields only
};

// Two passes per workload: the frozen policy builds indices with context
// accumulation, then every query runs against the final set. Latency
// statistics come from the second pass only. `preinstalled` (for the offline
// search baseline) seeds each workload's context with a fixed index set.
EvalOutcome evaluate_policy(Policy& policy, const std::vector<Workload>& test_workloads,
                            const EnvContext& env, const IndexSet* preinstalled = nullptr);

struct RunResult {
  RunConfig config;
  std::vector<Workload> test_workloads;
  std::vector<StepRecord> train_records;
  std::vector<CurvePoint> curves;
  std::vector<TrainingLogRow> training_log;
  SearchOutcome search;  // agent == search only
  EvalOutcome eval;
  nlohmann::json checkpoint;  // self-contained: config + schema + parameters
};

/// Full pipeline: build workloads, train (or search), evaluate, assemble artifacts.
RunResult run_training(const RunConfig& cfg);

/// run_training plus artifact files under the resolved output directory.
RunResult run_and_save(const RunConfig& cfg);

void write_run_artifacts(const RunResult& result, const std::string& dir);

/// Restores an agent from a self-contained checkpoint and evaluates it on the
/// given workloads file; writes summary and records under out_dir.
EvalSummary evaluate_checkpoint(const std::string& checkpoint_path,
                                const std::string& workloads_path, const std::string& out_dir);

/// Aggregates summary.json files from several run directories into
/// aggregate.json / aggregate.csv (mean, min, max per agent kind).
void write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace idxlab
