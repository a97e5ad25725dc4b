#include "idxlab/search.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

namespace idxlab {

namespace {

std::string keys_fingerprint(const Index& idx) {
  std::string s;
  for (const auto& k : idx.keys) {
    s += k;
    s += '\x1f';
  }
  return s;
}

}  // namespace

double search_score(const std::vector<int>& config, const std::vector<Query>& queries,
                    const std::vector<size_t>& subsample, const TableSchema& schema,
                    const Converter& converter, const CostModelParams& cost_params,
                    const RewardParams& reward_params, double w_size, int pointer_width,
                    IndexSet* decoded_set) {
  const int m = converter.config().m_streams;
  IndexSet set = reset(schema);
  std::unordered_set<std::string> seen;
  for (const auto& idx : set.indices) seen.insert(keys_fingerprint(idx));

  int64_t built_bytes = 0;
  for (size_t q = 0; q < queries.size(); ++q) {
    CompactAction action;
    action.choices.assign(config.begin() + q * m, config.begin() + (q + 1) * m);
    auto idx = converter.decode_compact(action, queries[q]);
    if (!idx) continue;
    if (!seen.insert(keys_fingerprint(*idx)).second) continue;
    built_bytes += index_size_bytes(*idx, schema, pointer_width);
    set.indices.push_back(std::move(*idx));
  }

  double latency_total = 0.0;
  for (size_t qi : subsample)
    latency_total += cost(queries[qi], set, schema, cost_params).latency;

  if (decoded_set != nullptr) *decoded_set = std::move(set);
  return latency_total / reward_params.latency_scale +
         w_size * static_cast<double>(built_bytes) / reward_params.size_scale;
}

SearchOutcome search_baseline(const std::vector<Workload>& train_workloads,
                              const TableSchema& schema, const Converter& converter,
                              const CostModelParams& cost_params,
                              const RewardParams& reward_params, const SearchConfig& config,
                              uint64_t seed, int pointer_width) {
  std::vector<Query> queries;
  for (const auto& w : train_workloads)
    queries.insert(queries.end(), w.queries.begin(), w.queries.end());
  const int m = converter.config().m_streams;
  const int n_max = converter.config().n_max;
  const size_t dims = queries.size() * static_cast<size_t>(m);

  std::mt19937_64 rng(seed);

  // One fixed evaluation subsample per run keeps candidate scores comparable.
  std::vector<size_t> subsample(queries.size());
  std::iota(subsample.begin(), subsample.end(), 0);
  std::shuffle(subsample.begin(), subsample.end(), rng);
  subsample.resize(std::max<size_t>(1, static_cast<size_t>(config.subsample_frac *
                                                           static_cast<double>(queries.size()))));

  auto score_of = [&](const std::vector<int>& cand, IndexSet* set_out) {
    return search_score(cand, queries, subsample, schema, converter, cost_params, reward_params,
                        config.w_size, pointer_width, set_out);
  };

  SearchOutcome outcome;
  outcome.best_config.assign(dims, 0);  // build-nothing start, same as the default baseline
  outcome.best_score = score_of(outcome.best_config, &outcome.best_set);
  outcome.log.push_back({0, "seed", outcome.best_score, outcome.best_score});

  enum Technique { kRandom = 0, kHillClimb = 1 };
  double technique_ema[2] = {0.0, 0.0};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> value_dist(0, n_max);
  std::uniform_int_distribution<size_t> dim_dist(0, dims - 1);

  for (int iter = 1; iter < config.budget; ++iter) {
    Technique technique;
    if (unit(rng) < config.explore_prob) {
      technique = unit(rng) < 0.5 ? kRandom : kHillClimb;
    } else {
      technique = technique_ema[kHillClimb] > technique_ema[kRandom] ? kHillClimb : kRandom;
    }

    std::vector<int> candidate;
    if (technique == kRandom) {
      candidate.resize(dims);
      for (auto& v : candidate) v = value_dist(rng);
    } else {
      candidate = outcome.best_config;
      const size_t d = dim_dist(rng);
      int v = value_dist(rng);
      while (v == candidate[d]) v = value_dist(rng);  // n_max >= 1 guarantees an alternative
      candidate[d] = v;
    }

    IndexSet cand_set;
    const double cand_score = score_of(candidate, &cand_set);
    const double improvement = std::max(0.0, outcome.best_score - cand_score);
    technique_ema[technique] =
        (1.0 - config.ema) * technique_ema[technique] + config.ema * improvement;

    if (cand_score < outcome.best_score) {
      outcome.best_score = cand_score;
      outcome.best_config = std::move(candidate);
      outcome.best_set = std::move(cand_set);
    }
    outcome.log.push_back({iter, technique == kRandom ? "random" : "hill_climb", cand_score,
                           outcome.best_score});
  }
  return outcome;
}

}  // namespace idxlab
