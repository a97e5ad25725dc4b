#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "idxlab/schema.hpp"

namespace idxlab {

struct SamplerConfig {
  int n_max = 3;        // max predicates per query
  double p_eq = 0.7;    // equality probability on range-comparable attributes
};

/// Draws synthetic COUNT(*) queries against one table. Owns its generator;
/// not meant to be shared across threads.
class QuerySampler {
 public:
  QuerySampler(const TableSchema& schema, SamplerConfig config, uint64_t seed);

  // Predicate count uniform in {1..n_max}; attributes without replacement;
  // EQ with probability p_eq (always EQ on unordered attributes), else LT/GT
  // equiprobable; value uniform in [0, distinct_count).
  Query sample_query();

 private:
  const TableSchema& schema_;
  SamplerConfig config_;
  std::mt19937_64 rng_;
};

/// `count` independently seeded workloads of `length` queries each.
/// Deterministic given (schema, count, length, seed).
std::vector<Workload> build_workloads(const TableSchema& schema, int count, int length,
                                      uint64_t seed, SamplerConfig config = {});

}  // namespace idxlab
