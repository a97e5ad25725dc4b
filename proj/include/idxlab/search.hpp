#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idxlab/config.hpp"
#include "idxlab/converter.hpp"
#include "idxlab/dbsim.hpp"
#include "idxlab/workload.hpp"

namespace idxlab {

/// One scored candidate during the search.
struct SearchLogRow {
  int iteration = 0;
  std::string technique;
  double candidate_score = 0.0;
  double best_score = 0.0;
};

struct SearchOutcome {
  std::vector<int> best_config;  // m stream choices per training query, flattened
  double best_score = 0.0;
  IndexSet best_set;  // default index plus the decoded candidates
  std::vector<SearchLogRow> log;
};

// Offline tuner over the same per-query decision space the agents use: one
// m-vector over {0..n_max} per training query. Candidates are scored on a
// fixed random half of the training queries by normalized total latency plus
// a weighted size term, starting from the all-zeros (build-nothing)
// configuration. An adaptive ensemble of uniform resampling and one-parameter
// hill climbing picks the next candidate, techniques weighted by the recent
// improvement they produced.
SearchOutcome search_baseline(const std::vector<Workload>& train_workloads,
                              const TableSchema& schema, const Converter& converter,
                              const CostModelParams& cost_params,
                              const RewardParams& reward_params, const SearchConfig& config,
                              uint64_t seed, int pointer_width = 8);

/// Score of one configuration under a given subsample (exposed for tests).
double search_score(const std::vector<int>& config, const std::vector<Query>& queries,
                    const std::vector<size_t>& subsample, const TableSchema& schema,
                    const Converter& converter, const CostModelParams& cost_params,
                    const RewardParams& reward_params, double w_size, int pointer_width,
                    IndexSet* decoded_set = nullptr);

}  // namespace idxlab
