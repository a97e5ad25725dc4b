#include "idxlab/workload.hpp"

#include <algorithm>
#include <numeric>

namespace idxlab {

namespace {

// splitmix64 finalizer; derives disjoint per-workload seeds from one master seed.
uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

QuerySampler::QuerySampler(const TableSchema& schema, SamplerConfig config, uint64_t seed)
    : schema_(schema), config_(config), rng_(seed) {
  if (config_.n_max < 1) throw SchemaError("n_max must be >= 1");
  if (config_.n_max > static_cast<int>(schema.attributes.size()))
    throw SchemaError("n_max exceeds attribute count");
}

Query QuerySampler::sample_query() {
  Query q;
  q.table = schema_.name;

  std::uniform_int_distribution<int> count_dist(1, config_.n_max);
  const int n_preds = count_dist(rng_);

  // Partial Fisher-Yates: first n_preds slots are a uniform draw without replacement.
  std::vector<int> order(schema_.attributes.size());
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < n_preds; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(order.size()) - 1);
    std::swap(order[i], order[pick(rng_)]);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n_preds; ++i) {
    const AttributeStats& attr = schema_.attributes[order[i]];
    Predicate p;
    p.attribute = attr.name;
    if (!attr.ordered_domain) {
      p.op = Op::kEq;
    } else if (unit(rng_) < config_.p_eq) {
      p.op = Op::kEq;
    } else {
      p.op = unit(rng_) < 0.5 ? Op::kLt : Op::kGt;
    }
    std::uniform_int_distribution<int64_t> value_dist(0, attr.distinct_count - 1);
    p.value = value_dist(rng_);
    q.predicates.push_back(std::move(p));
  }
  return q;
}

std::vector<Workload> build_workloads(const TableSchema& schema, int count, int length,
                                      uint64_t seed, SamplerConfig config) {
  if (count < 1 || length < 1) throw SchemaError("workload count and length must be >= 1");
  std::vector<Workload> out;
  out.reserve(count);
  for (int w = 0; w < count; ++w) {
    Workload wl;
    wl.seed = mix_seed(seed, static_cast<uint64_t>(w));
    QuerySampler sampler(schema, config, wl.seed);
    for (int i = 0; i < length; ++i) {
      Query q = sampler.sample_query();
      q.id = i;
      wl.queries.push_back(std::move(q));
    }
    out.push_back(std::move(wl));
  }
  return out;
}

}  // namespace idxlab
