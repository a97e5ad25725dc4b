#include "idxlab/converter.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace idxlab {

Vocabulary::Vocabulary(const TableSchema& schema) {
  auto add = [&](const std::string& tok) {
    int id = static_cast<int>(id_to_token_.size());
    token_to_id_.emplace(tok, id);
    id_to_token_.push_back(tok);
    return id;
  };
  add("pad");  // id 0 by construction
  idx_id_ = add("idx");
  noop_id_ = add("noop");
  op_ids_[0] = add("=");
  op_ids_[1] = add("<");
  op_ids_[2] = add(">");
  for (const auto& a : schema.attributes) add(a.name);
  for (const auto& a : schema.attributes) add(a.name + "_idx");
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) throw SchemaError("token not in vocabulary: " + token);
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw SchemaError("token id out of range");
  return id_to_token_[id];
}

int Vocabulary::op_id(Op op) const { return op_ids_[static_cast<int>(op)]; }
int Vocabulary::attr_id(const std::string& attr) const { return id(attr); }
int Vocabulary::attr_idx_id(const std::string& attr) const { return id(attr + "_idx"); }

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (int i = 0; i < size(); ++i) j[id_to_token_[i]] = i;
  return j;
}

std::vector<int> PermutationAction::slot_at_position() const {
  const int n = static_cast<int>(hard.rows());
  std::vector<int> out(n, -1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (hard(i, j) > 0.5) {
        out[j] = i;
        break;
      }
    }
  }
  return out;
}

bool is_permutation_matrix(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i) {
    int row_ones = 0;
    for (int j = 0; j < n; ++j) {
      const double v = m(i, j);
      if (std::abs(v - 1.0) < tol) {
        ++row_ones;
      } else if (std::abs(v) > tol) {
        return false;
      }
    }
    if (row_ones != 1) return false;
  }
  for (int j = 0; j < n; ++j) {
    double col_sum = m.col(j).sum();
    if (std::abs(col_sum - 1.0) > tol) return false;
  }
  return true;
}

Eigen::MatrixXd permutation_matrix_from_positions(const std::vector<int>& slot_to_pos) {
  const int n = static_cast<int>(slot_to_pos.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, slot_to_pos[i]) = 1.0;
  return p;
}

int64_t action_space_size(int n, ActionScheme scheme, int m) {
  if (n < 0) throw SchemaError("action_space_size: n must be >= 0");
  if (scheme == ActionScheme::kCompact) {
    int64_t total = 1;
    for (int j = 0; j < m; ++j) total *= (n + 1);
    return total;
  }
  // sum over prefix lengths k of C(n,k) * k! = n! / (n-k)!
  int64_t total = 0;
  for (int k = 0; k <= n; ++k) {
    int64_t arrangements = 1;
    for (int i = 0; i < k; ++i) arrangements *= (n - i);
    total += arrangements;
  }
  return total;
}

RewardParams default_reward_params(const TableSchema& schema, const CostModelParams& cost_params,
                                   int pointer_width) {
  double mean_width = 0.0;
  for (const auto& a : schema.attributes) mean_width += a.width_bytes;
  mean_width /= static_cast<double>(schema.attributes.size());
  RewardParams p;
  p.size_scale = static_cast<double>(schema.row_count) * (3.0 * mean_width + pointer_width);
  p.latency_scale = cost_params.c_seq * static_cast<double>(schema.row_count);
  return p;
}

double to_reward(double delta_size, double latency, const RewardParams& params) {
  if (delta_size < 0.0 || latency < 0.0)
    throw SchemaError("to_reward: negative delta_size or latency");
  return -params.w_size * (delta_size / params.size_scale) -
         params.w_latency * (latency / params.latency_scale);
}

Converter::Converter(const TableSchema& schema, ConverterConfig config)
    : schema_(schema), config_(config), vocab_(schema) {
  if (config_.flat_len < 2 * config_.n_max) throw SchemaError("flat_len too small");
  if (config_.row_token_budget < 2) throw SchemaError("row_token_budget too small");
}

FlatState Converter::to_flat_state(const Query& query, const IndexSet& context) const {
  FlatState state;
  state.token_ids.reserve(config_.flat_len);

  for (const auto& p : query.predicates) {
    state.token_ids.push_back(vocab_.attr_id(p.attribute));
    state.token_ids.push_back(vocab_.op_id(p.op));
  }

  const auto query_attrs = query.attribute_names();
  auto shares_attribute = [&](const Index& idx) {
    return std::any_of(idx.keys.begin(), idx.keys.end(), [&](const std::string& k) {
      return std::find(query_attrs.begin(), query_attrs.end(), k) != query_attrs.end();
    });
  };

  for (const auto& idx : context.indices) {
    if (!shares_attribute(idx)) continue;
    state.token_ids.push_back(vocab_.idx_id());
    for (const auto& key : idx.keys) state.token_ids.push_back(vocab_.attr_idx_id(key));
  }

  if (static_cast<int>(state.token_ids.size()) > config_.flat_len) {
    state.token_ids.resize(config_.flat_len);
    state.truncated = true;
  } else {
    state.token_ids.resize(config_.flat_len, Vocabulary::kPad);
  }
  return state;
}

MatrixState Converter::to_matrix_state(const Query& query, const IndexSet& context) const {
  const int n = static_cast<int>(query.predicates.size());
  if (n > config_.n_max) throw SchemaError("query has more predicates than n_max");

  MatrixState state;
  state.rows = state_rows();
  state.cols = config_.row_token_budget;
  state.ids.assign(static_cast<size_t>(state.rows) * state.cols, Vocabulary::kPad);

  const int noop_row = noop_slot(n);
  state.at(noop_row, 0) = vocab_.noop_id();

  // Attribute rows occupy slots 0..n-1; each carries the indices that contain
  // its attribute so per-attribute context stays attached to that attribute.
  for (int i = 0; i < n; ++i) {
    const Predicate& pred = query.predicates[i];
    std::vector<int> row_tokens{vocab_.attr_id(pred.attribute), vocab_.op_id(pred.op)};
    for (const auto& idx : context.indices) {
      if (std::find(idx.keys.begin(), idx.keys.end(), pred.attribute) == idx.keys.end()) continue;
      row_tokens.push_back(vocab_.idx_id());
      for (const auto& key : idx.keys) row_tokens.push_back(vocab_.attr_idx_id(key));
    }
    if (static_cast<int>(row_tokens.size()) > state.cols) {
      row_tokens.resize(state.cols);
      state.truncated = true;
    }
    for (size_t c = 0; c < row_tokens.size(); ++c) state.at(i, static_cast<int>(c)) = row_tokens[c];
  }
  return state;
}

std::optional<Index> Converter::decode_compact(const CompactAction& action,
                                               const Query& query) const {
  const int n = static_cast<int>(query.predicates.size());
  std::vector<std::string> keys;
  for (int choice : action.choices) {
    if (choice < 1 || choice > n) continue;  // stream no-op (includes ill-defined choices)
    const std::string& attr = query.predicates[choice - 1].attribute;
    if (std::find(keys.begin(), keys.end(), attr) == keys.end()) keys.push_back(attr);
  }
  if (keys.empty()) return std::nullopt;
  return Index{query.table, std::move(keys)};
}

int Converter::noop_slot(int n_attrs) const {
  return config_.noop_row_last ? state_rows() - 1 : n_attrs;
}

bool Converter::slot_is_attr(int slot, int n_attrs) const { return slot < n_attrs; }

std::optional<Index> Converter::decode_permutation(const PermutationAction& action,
                                                   const Query& query) const {
  const int n_slots = state_rows();
  if (action.hard.rows() != n_slots || action.hard.cols() != n_slots)
    throw SchemaError("permutation action has wrong size");
  if (!is_permutation_matrix(action.hard))
    throw SchemaError("hard action is not a permutation matrix");

  const int n = static_cast<int>(query.predicates.size());
  std::vector<std::string> keys;
  for (int slot : action.slot_at_position()) {
    if (!slot_is_attr(slot, n)) break;  // pad and no-op slots both close the prefix
    keys.push_back(query.predicates[slot].attribute);
  }
  if (keys.empty()) return std::nullopt;
  return Index{query.table, std::move(keys)};
}

}  // namespace idxlab
