#include "idxlab/dbsim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace idxlab {

std::string Index::display_name() const {
  std::string out = table + "(";
  for (size_t i = 0; i < keys.size(); ++i) {
    if (i) out += "+";
    out += keys[i];
  }
  out += ")";
  return out;
}

bool IndexSet::contains(const Index& idx) const {
  return std::find(indices.begin(), indices.end(), idx) != indices.end();
}

int usable_prefix(const Index& index, const Query& query) {
  if (index.table != query.table) return 0;
  std::unordered_map<std::string, Op> pred_ops;
  for (const auto& p : query.predicates) pred_ops.emplace(p.attribute, p.op);

  int p = 0;
  for (const auto& key : index.keys) {
    auto it = pred_ops.find(key);
    if (it == pred_ops.end()) break;
    ++p;
    if (it->second != Op::kEq) break;  // a range key closes the prefix
  }
  return p;
}

namespace {

struct Candidate {
  double latency;
  const Index* index;  // nullptr = full scan
  int prefix_len;
};

double index_scan_cost(const Index& index, int prefix_len, const Query& query,
                       const TableSchema& schema, const CostModelParams& params) {
  double sel = 1.0;
  for (int i = 0; i < prefix_len; ++i) {
    const std::string& key = index.keys[i];
    Op op = Op::kEq;
    for (const auto& p : query.predicates) {
      if (p.attribute == key) {
        op = p.op;
        break;
      }
    }
    if (op == Op::kEq) {
      sel *= selectivity(schema, key);
    } else {
      sel *= params.f_range;  // trailing range key; prefix construction guarantees it is last
    }
  }
  const double rows = static_cast<double>(schema.row_count);
  return params.c_probe * std::log2(rows) + params.c_fetch * sel * rows + params.c_op;
}

// Cheaper first; on equal cost prefer fewer keys, then lexicographic key order,
// and the full scan only when nothing else ties.
bool better(const Candidate& a, const Candidate& b) {
  if (a.latency != b.latency) return a.latency < b.latency;
  const bool a_scan = a.index == nullptr;
  const bool b_scan = b.index == nullptr;
  if (a_scan != b_scan) return b_scan;
  if (a_scan) return false;
  if (a.index->keys.size() != b.index->keys.size())
    return a.index->keys.size() < b.index->keys.size();
  return a.index->keys < b.index->keys;
}

}  // namespace

ExecutionReport cost(const Query& query, const IndexSet& index_set, const TableSchema& schema,
                     const CostModelParams& params, std::mt19937_64* noise_rng) {
  Candidate best{params.c_seq * static_cast<double>(schema.row_count), nullptr, 0};

  for (const auto& index : index_set.indices) {
    const int p = usable_prefix(index, query);
    if (p < 1) continue;
    Candidate cand{index_scan_cost(index, p, query, schema, params), &index, p};
    if (better(cand, best)) best = cand;
  }

  ExecutionReport report;
  report.latency = best.latency;
  report.chosen_path = best.index ? best.index->display_name() : kFullScanPath;
  report.usable_prefix_len = best.prefix_len;

  if (params.noise_sigma > 0.0 && noise_rng != nullptr) {
    std::normal_distribution<double> noise(1.0, params.noise_sigma);
    report.latency *= std::max(0.0, noise(*noise_rng));
  }
  return report;
}

int64_t index_size_bytes(const Index& index, const TableSchema& schema, int pointer_width) {
  int64_t width = pointer_width;
  for (const auto& key : index.keys) width += schema.attribute(key).width_bytes;
  return schema.row_count * width;
}

int64_t index_set_bytes(const IndexSet& set, const TableSchema& schema, int pointer_width) {
  int64_t total = 0;
  for (const auto& idx : set.indices) total += index_size_bytes(idx, schema, pointer_width);
  return total;
}

std::pair<IndexSet, int64_t> create_index(const IndexSet& set, const Index& index,
                                          const TableSchema& schema, int pointer_width) {
  if (index.keys.empty()) throw SchemaError("index must have at least one key");
  std::unordered_map<std::string, int> seen;
  for (const auto& key : index.keys) {
    if (++seen[key] > 1) throw SchemaError("duplicate index key " + key);
    schema.attribute(key);  // throws on unknown key
  }
  if (set.contains(index)) return {set, 0};
  IndexSet next = set;
  next.indices.push_back(index);
  return {next, index_size_bytes(index, schema, pointer_width)};
}

IndexSet reset(const TableSchema& schema) {
  IndexSet set;
  set.table = schema.name;
  set.indices.push_back(Index{schema.name, schema.default_index_keys});
  return set;
}

}  // namespace idxlab
