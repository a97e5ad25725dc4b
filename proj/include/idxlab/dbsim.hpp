#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "idxlab/schema.hpp"

namespace idxlab {

/// A compound index: ordered key list over one table's attributes.
struct Index {
  std::string table;
  std::vector<std::string> keys;

  bool operator==(const Index& other) const = default;
  std::string display_name() const;  // "table(k1+k2+...)"
};

/// The evolving per-episode context: default index plus whatever has been built.
struct IndexSet {
  std::string table;
  std::vector<Index> indices;

  bool contains(const Index& idx) const;
};

inline constexpr const char* kFullScanPath = "FULL_SCAN";

struct ExecutionReport {
  double latency = 0.0;           // abstract cost units
  std::string chosen_path;        // kFullScanPath or Index::display_name()
  int usable_prefix_len = 0;      // 0 iff chosen_path == kFullScanPath

  bool used_index() const { return chosen_path != kFullScanPath; }
};

/// Cost-model constants, abstract units. All overridable from the run config.
struct CostModelParams {
  double c_seq = 1.0;     // sequential scan cost per row
  double c_probe = 50.0;  // B-tree descent cost per log2(row) level
  double c_fetch = 2.0;   // fetch cost per selected row
  double c_op = 100.0;    // fixed per-index-scan overhead
  double f_range = 1.0 / 3.0;  // selectivity contribution of one trailing range key
  double noise_sigma = 0.0;    // optional multiplicative Gaussian latency noise
};

// Largest p such that keys[0..p) are all query predicate attributes, keys[0..p-1)
// all carry EQ predicates, and keys[p-1] carries EQ or a range operator. Only one
// trailing range key is usable; keys after it do not narrow a lexicographic scan.
int usable_prefix(const Index& index, const Query& query);

// Prices `query` against every access path and returns the cheapest.
// Full scan: c_seq * R.
// Index with usable prefix p >= 1: c_probe*log2(R) + c_fetch*sel*R + c_op, where
// sel is the product of key selectivities over EQ prefix keys, times f_range if
// the prefix ends in a range key. Ties: fewer keys, then lexicographic key order,
// full scan last.
ExecutionReport cost(const Query& query, const IndexSet& index_set, const TableSchema& schema,
                     const CostModelParams& params = {}, std::mt19937_64* noise_rng = nullptr);

/// Size in bytes of one index: R * (sum of key widths + pointer_width).
int64_t index_size_bytes(const Index& index, const TableSchema& schema, int pointer_width = 8);

/// Total bytes over all indices in the set (default index included).
int64_t index_set_bytes(const IndexSet& set, const TableSchema& schema, int pointer_width = 8);

// Appends `index` unless an identical one exists. Returns the bytes added
// (0 for a duplicate). The input set is not modified.
std::pair<IndexSet, int64_t> create_index(const IndexSet& set, const Index& index,
                                          const TableSchema& schema, int pointer_width = 8);

/// Fresh per-episode context holding exactly the default index.
IndexSet reset(const TableSchema& schema);

}  // namespace idxlab
