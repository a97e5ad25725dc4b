#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "idxlab/bdqn.hpp"
#include "idxlab/converter.hpp"
#include "idxlab/dbsim.hpp"
#include "idxlab/spg.hpp"

namespace idxlab {

enum class AgentKind { kBdqn, kSpg, kDefault, kFull, kSearch };

const char* agent_kind_name(AgentKind kind);
AgentKind agent_kind_from_name(const std::string& name);

struct WorkloadConfig {
  int train_count = 100;
  int test_count = 3;
  int length = 25;
  uint64_t seed = 7;
  uint64_t test_seed = 7900117;  // disjoint from training by default
  int n_max = 3;
  double p_eq = 0.7;
};

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  double decay_frac = 0.5;  // fraction of training steps spent decaying

  double at(int64_t step, int64_t total_steps) const;
};

struct SearchConfig {
  int budget = 500;
  double subsample_frac = 0.5;
  double w_size = 0.5;        // size term weight in the candidate score
  double explore_prob = 0.2;  // technique-bandit exploration
  double ema = 0.3;           // technique score smoothing
};

/// Everything one run needs. Unknown JSON keys are rejected on load.
struct RunConfig {
  std::string schema_path = "data/lineitem.json";
  AgentKind agent = AgentKind::kBdqn;
  uint64_t seed = 0;
  std::string out_dir = "runs/out";
  int curve_window = 10;
  int pointer_width = 8;

  WorkloadConfig workloads;
  CostModelParams cost_model;
  ConverterConfig converter;
  double w_size = 0.5;
  double w_latency = 0.5;

  // agent hyperparameters (vocab_size and shape fields are filled at run time)
  BdqnConfig bdqn;
  SpgConfig spg;
  EpsilonSchedule epsilon;
  SearchConfig search;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load_file(const std::string& path);

  /// Resolves out_dir under the IDXLAB_OUT_ROOT environment variable when set.
  std::string resolved_out_dir() const;
};

}  // namespace idxlab
