#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "idxlab/dbsim.hpp"
#include "idxlab/schema.hpp"

namespace idxlab {

/// Token table built once from a schema: specials, operators, one token per
/// attribute plus one per attribute in index position ("<attr>_idx").
class Vocabulary {
 public:
  static constexpr int kPad = 0;

  explicit Vocabulary(const TableSchema& schema);

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  int pad_id() const { return kPad; }
  int idx_id() const { return idx_id_; }
  int noop_id() const { return noop_id_; }
  int op_id(Op op) const;
  int attr_id(const std::string& attr) const;
  int attr_idx_id(const std::string& attr) const;

  nlohmann::json to_json() const;

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  int idx_id_ = 0;
  int noop_id_ = 0;
  int op_ids_[3] = {0, 0, 0};
};

/// Fixed-length token-id vector: query tokens ++ relevant-context tokens, zero-padded.
struct FlatState {
  std::vector<int> token_ids;
  bool truncated = false;
};

/// N x K token-id matrix; one row per query-attribute slot plus a no-op row.
struct MatrixState {
  int rows = 0;
  int cols = 0;
  std::vector<int> ids;  // row-major
  bool truncated = false;

  int at(int r, int c) const { return ids[static_cast<size_t>(r) * cols + c]; }
  int& at(int r, int c) { return ids[static_cast<size_t>(r) * cols + c]; }
};

/// One integer in {0..n_max} per candidate index key; 0 = no-op for that stream.
struct CompactAction {
  std::vector<int> choices;
};

/// Hard permutation plus the doubly-stochastic relaxation it was rounded from.
struct PermutationAction {
  Eigen::MatrixXd hard;     // exactly one 1 per row and per column
  Eigen::MatrixXd relaxed;  // rows/cols sum to 1 within tolerance

  // slot index placed at each output position (hard read column-wise)
  std::vector<int> slot_at_position() const;
};

bool is_permutation_matrix(const Eigen::MatrixXd& m, double tol = 1e-9);
Eigen::MatrixXd permutation_matrix_from_positions(const std::vector<int>& slot_to_pos);

enum class ActionScheme { kCombinatorial, kCompact };

// Number of distinct indices (or action tuples) reachable for an n-attribute
// query: combinatorial = sum_k C(n,k)*k!; compact with m streams = (n+1)^m.
int64_t action_space_size(int n, ActionScheme scheme, int m = 3);

struct ConverterConfig {
  int flat_len = 32;        // fixed token budget of the flat encoding
  int row_token_budget = 8; // K: per-row token budget of the matrix encoding
  int n_max = 3;
  int m_streams = 3;
  bool noop_row_last = true;  // no-op row at N-1, padding rows in between
};

struct RewardParams {
  double w_size = 0.5;
  double w_latency = 0.5;
  double size_scale = 1.0;     // bytes; defaults derived from schema, see default_reward_params
  double latency_scale = 1.0;  // cost units
};

/// size scale = bytes of a 3-key index of mean attribute width; latency scale = full-scan cost.
RewardParams default_reward_params(const TableSchema& schema, const CostModelParams& cost_params,
                                   int pointer_width = 8);

/// -w_size * delta_size/size_scale - w_latency * latency/latency_scale.
double to_reward(double delta_size, double latency, const RewardParams& params);

/// Query+context encodings and agent-output decodings for both agent families.
class Converter {
 public:
  Converter(const TableSchema& schema, ConverterConfig config);

  const Vocabulary& vocab() const { return vocab_; }
  const ConverterConfig& config() const { return config_; }
  int state_rows() const { return config_.n_max + 1; }  // N

  FlatState to_flat_state(const Query& query, const IndexSet& context) const;
  MatrixState to_matrix_state(const Query& query, const IndexSet& context) const;

  // nullopt = no-op. Stream choices pointing past the query's predicates are
  // treated as per-stream no-ops; duplicate attributes keep the first occurrence.
  std::optional<Index> decode_compact(const CompactAction& action, const Query& query) const;

  // Applies the hard permutation to the slot sequence [attr_1..attr_n, pads, noop]
  // and keeps the attributes before the first pad/no-op slot; empty prefix = no-op.
  std::optional<Index> decode_permutation(const PermutationAction& action,
                                          const Query& query) const;

 private:
  int noop_slot(int n_attrs) const;
  bool slot_is_attr(int slot, int n_attrs) const;

  const TableSchema& schema_;
  ConverterConfig config_;
  Vocabulary vocab_;
};

}  // namespace idxlab
