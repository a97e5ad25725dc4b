#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace idxlab::nn {

using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// One named parameter with its gradient and Adam moments.
struct Param {
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;
};

/// Named parameter map with Adam state. Single writer during an update;
/// concurrent reads of frozen values are safe.
class ParamStore {
 public:
  Param& add(const std::string& name, Matrix init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  void zero_grads();
  void mark_grads_live() { grads_live_ = true; }
  bool grads_live() const { return grads_live_; }

  double grad_global_norm() const;
  void clip_grad_global_norm(double max_norm);

  /// Bias-corrected Adam update over every parameter; clears gradients.
  /// Throws if no backward pass populated gradients since the last step.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Copies parameter values (not moments) from another store; shapes must match.
  void copy_values_from(const ParamStore& other);
  bool values_equal(const ParamStore& other) const;

  int64_t step_count() const { return step_; }
  size_t size() const { return params_.size(); }

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& [name, p] : params_) fn(name, p);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [name, p] : params_) fn(name, p);
  }

  nlohmann::json to_json() const;
  static ParamStore from_json(const nlohmann::json& j);

 private:
  std::map<std::string, Param> params_;  // ordered: deterministic iteration
  int64_t step_ = 0;
  bool grads_live_ = false;
};

/// Define-by-run reverse-mode graph over 2-D matrices. Built fresh per forward
/// pass; backward() accumulates into the ParamStores the leaves came from.
class Tape {
 public:
  using NodeId = int;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  NodeId input(Matrix value);
  NodeId param(ParamStore& store, const std::string& name);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, double c);
  NodeId add_rowvec(NodeId a, NodeId row);  // row: 1 x C broadcast over rows
  NodeId add_colvec(NodeId a, NodeId col);  // col: R x 1 broadcast over columns
  NodeId sub_rowvec(NodeId a, NodeId row);
  NodeId sub_colvec(NodeId a, NodeId col);

  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId exp(NodeId a);

  NodeId sum_all(NodeId a);   // -> 1 x 1
  NodeId mean_all(NodeId a);  // -> 1 x 1
  NodeId mean_cols(NodeId a); // R x C -> R x 1
  NodeId mean_rows(NodeId a); // R x C -> 1 x C
  NodeId logsumexp_rows(NodeId a);  // R x C -> R x 1, max-shifted
  NodeId logsumexp_cols(NodeId a);  // R x C -> 1 x C

  NodeId concat_cols(NodeId a, NodeId b);
  NodeId concat_rows(const std::vector<NodeId>& parts);
  NodeId slice_rows(NodeId a, int first, int count);

  /// One entry per row: out(r, 0) = a(r, col_of_row[r]).
  NodeId select_cols(NodeId a, std::vector<int> col_of_row);

  /// Row lookups into an embedding table (id 0 is a frozen zero row, skipped
  /// in both directions). concat: B x T ids -> B x (T*E); sum: B x T -> B x E.
  NodeId embed_concat(NodeId table, IntMatrix ids);
  NodeId embed_sum(NodeId table, IntMatrix ids);

  const Matrix& value(NodeId id) const {
    const Node& n = nodes_[id];
    return n.view ? *n.view : n.value;
  }
  Matrix& grad(NodeId id) { return nodes_[id].grad; }

  /// Reverse sweep from a 1x1 root; adds leaf gradients into their stores.
  void backward(NodeId root);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* view = nullptr;  // parameter leaves alias their store entry
    Matrix grad;
    std::function<void()> backprop;  // empty for leaves
  };

  const Matrix& val(NodeId id) const { return value(id); }
  NodeId emplace(Matrix value, std::function<void()> backprop);
  void check_finite(const Matrix& m, const char* where) const;

  std::vector<Node> nodes_;
  std::vector<std::pair<NodeId, Param*>> param_leaves_;
  std::vector<ParamStore*> stores_;
};

}  // namespace idxlab::nn
