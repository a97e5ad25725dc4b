#include "idxlab/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace idxlab::nn {

// ---------------------------------------------------------------------------
// ParamStore
// ---------------------------------------------------------------------------

Param& ParamStore::add(const std::string& name, Matrix init) {
  if (params_.count(name)) throw NumericError("parameter already exists: " + name);
  Param p;
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.m = Matrix::Zero(init.rows(), init.cols());
  p.v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  auto [it, ok] = params_.emplace(name, std::move(p));
  (void)ok;
  return it->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw NumericError("unknown parameter: " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw NumericError("unknown parameter: " + name);
  return it->second;
}

bool ParamStore::contains(const std::string& name) const { return params_.count(name) > 0; }

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.setZero();
  grads_live_ = false;
}

double ParamStore::grad_global_norm() const {
  double sq = 0.0;
  for (const auto& [name, p] : params_) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::clip_grad_global_norm(double max_norm) {
  const double norm = grad_global_norm();
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& [name, p] : params_) p.grad *= factor;
  }
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  if (!grads_live_) throw NumericError("adam_step called without populated gradients");
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [name, p] : params_) {
    p.m = beta1 * p.m + (1.0 - beta1) * p.grad;
    p.v = beta2 * p.v + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
    const Matrix m_hat = p.m / bc1;
    const Matrix v_hat = p.v / bc2;
    p.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps);
  }
  zero_grads();
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (auto& [name, p] : params_) {
    const Param& src = other.at(name);
    if (src.value.rows() != p.value.rows() || src.value.cols() != p.value.cols())
      throw NumericError("copy_values_from: shape mismatch for " + name);
    p.value = src.value;
  }
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (const auto& [name, p] : params_) {
    if (!other.contains(name)) return false;
    const Param& o = other.at(name);
    if (p.value.rows() != o.value.rows() || p.value.cols() != o.value.cols()) return false;
    if (p.value != o.value) return false;  // bitwise equality
  }
  return true;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) return Matrix(0, 0);
  const auto cols = j.at(0).size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (row.size() != cols) throw NumericError("ragged matrix in checkpoint");
    for (size_t c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json ParamStore::to_json() const {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, p] : params_) {
    params[name] = {{"shape", {p.value.rows(), p.value.cols()}},
                    {"value", matrix_to_json(p.value)},
                    {"m", matrix_to_json(p.m)},
                    {"v", matrix_to_json(p.v)}};
  }
  return nlohmann::json{{"format", "idxlab-params-v1"}, {"step", step_}, {"params", params}};
}

ParamStore ParamStore::from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "idxlab-params-v1")
    throw NumericError("unsupported checkpoint format");
  ParamStore store;
  store.step_ = j.at("step").get<int64_t>();
  for (const auto& [name, pj] : j.at("params").items()) {
    const auto shape = pj.at("shape").get<std::vector<int64_t>>();
    Param& p = store.add(name, matrix_from_json(pj.at("value")));
    p.m = matrix_from_json(pj.at("m"));
    p.v = matrix_from_json(pj.at("v"));
    if (p.value.rows() != shape.at(0) || p.value.cols() != shape.at(1))
      throw NumericError("checkpoint shape mismatch for " + name);
  }
  return store;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::check_finite(const Matrix& m, const char* where) const {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values at ") + where);
}

Tape::NodeId Tape::emplace(Matrix value, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::input(Matrix value) {
  check_finite(value, "input");
  return emplace(std::move(value), nullptr);
}

Tape::NodeId Tape::param(ParamStore& store, const std::string& name) {
  Param& p = store.at(name);
  Node n;
  n.view = &p.value;  // alias, not a copy; updates between tapes are visible
  nodes_.push_back(std::move(n));
  NodeId id = static_cast<NodeId>(nodes_.size() - 1);
  param_leaves_.emplace_back(id, &p);
  if (std::find(stores_.begin(), stores_.end(), &store) == stores_.end())
    stores_.push_back(&store);
  return id;
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Matrix& av = val(a);
  const Matrix& bv = val(b);
  if (av.cols() != bv.rows()) throw NumericError("matmul shape mismatch");
  NodeId out = emplace(av * bv, nullptr);
  nodes_[out].backprop = [this, a, b, out] {
    const Matrix& g = nodes_[out].grad;
    nodes_[a].grad.noalias() += g * val(b).transpose();
    nodes_[b].grad.noalias() += val(a).transpose() * g;
  };
  return out;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  if (val(a).rows() != val(b).rows() ||
      val(a).cols() != val(b).cols())
    throw NumericError("add shape mismatch");
  NodeId out = emplace(val(a) + val(b), nullptr);
  nodes_[out].backprop = [this, a, b, out] {
    nodes_[a].grad += nodes_[out].grad;
    nodes_[b].grad += nodes_[out].grad;
  };
  return out;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  if (val(a).rows() != val(b).rows() ||
      val(a).cols() != val(b).cols())
    throw NumericError("sub shape mismatch");
  NodeId out = emplace(val(a) - val(b), nullptr);
  nodes_[out].backprop = [this, a, b, out] {
    nodes_[a].grad += nodes_[out].grad;
    nodes_[b].grad -= nodes_[out].grad;
  };
  return out;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  if (val(a).rows() != val(b).rows() ||
      val(a).cols() != val(b).cols())
    throw NumericError("mul shape mismatch");
  NodeId out = emplace(val(a).cwiseProduct(val(b)), nullptr);
  nodes_[out].backprop = [this, a, b, out] {
    nodes_[a].grad += nodes_[out].grad.cwiseProduct(val(b));
    nodes_[b].grad += nodes_[out].grad.cwiseProduct(val(a));
  };
  return out;
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  NodeId out = emplace(val(a) * c, nullptr);
  nodes_[out].backprop = [this, a, out, c] { nodes_[a].grad += c * nodes_[out].grad; };
  return out;
}

Tape::NodeId Tape::add_rowvec(NodeId a, NodeId row) {
  const Matrix& av = val(a);
  const Matrix& rv = val(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw NumericError("add_rowvec shape mismatch");
  NodeId out = emplace(av.rowwise() + rv.row(0), nullptr);
  nodes_[out].backprop = [this, a, row, out] {
    nodes_[a].grad += nodes_[out].grad;
    nodes_[row].grad.row(0) += nodes_[out].grad.colwise().sum();
  };
  return out;
}

Tape::NodeId Tape::add_colvec(NodeId a, NodeId col) {
  const Matrix& av = val(a);
  const Matrix& cv = val(col);
  if (cv.cols() != 1 || cv.rows() != av.rows()) throw NumericError("add_colvec shape mismatch");
  NodeId out = emplace(av.colwise() + cv.col(0), nullptr);
  nodes_[out].backprop = [this, a, col, out] {
    nodes_[a].grad += nodes_[out].grad;
    nodes_[col].grad.col(0) += nodes_[out].grad.rowwise().sum();
  };
  return out;
}

Tape::NodeId Tape::sub_rowvec(NodeId a, NodeId row) {
  const Matrix& av = val(a);
  const Matrix& rv = val(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw NumericError("sub_rowvec shape mismatch");
  NodeId out = emplace(av.rowwise() - rv.row(0), nullptr);
  nodes_[out].backprop = [this, a, row, out] {
    nodes_[a].grad += nodes_[out].grad;
    nodes_[row].grad.row(0) -= nodes_[out].grad.colwise().sum();
  };
  return out;
}

Tape::NodeId Tape::sub_colvec(NodeId a, NodeId col) {
  const Matrix& av = val(a);
  const Matrix& cv = val(col);
  if (cv.cols() != 1 || cv.rows() != av.rows()) throw NumericError("sub_colvec shape mismatch");
  NodeId out = emplace(av.colwise() - cv.col(0), nullptr);
  nodes_[out].backprop = [this, a, col, out] {
    nodes_[a].grad += nodes_[out].grad;
    nodes_[col].grad.col(0) -= nodes_[out].grad.rowwise().sum();
  };
  return out;
}

Tape::NodeId Tape::relu(NodeId a) {
  NodeId out = emplace(val(a).cwiseMax(0.0), nullptr);
  nodes_[out].backprop = [this, a, out] {
    nodes_[a].grad.array() +=
        nodes_[out].grad.array() * (val(a).array() > 0.0).cast<double>();
  };
  return out;
}

Tape::NodeId Tape::tanh(NodeId a) {
  NodeId out = emplace(val(a).array().tanh().matrix(), nullptr);
  nodes_[out].backprop = [this, a, out] {
    nodes_[a].grad.array() +=
        nodes_[out].grad.array() * (1.0 - nodes_[out].value.array().square());
  };
  return out;
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  Matrix v = (1.0 / (1.0 + (-val(a).array()).exp())).matrix();
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, a, out] {
    const auto& s = nodes_[out].value.array();
    nodes_[a].grad.array() += nodes_[out].grad.array() * s * (1.0 - s);
  };
  return out;
}

Tape::NodeId Tape::exp(NodeId a) {
  NodeId out = emplace(val(a).array().exp().matrix(), nullptr);
  nodes_[out].backprop = [this, a, out] {
    nodes_[a].grad.array() += nodes_[out].grad.array() * nodes_[out].value.array();
  };
  return out;
}

Tape::NodeId Tape::sum_all(NodeId a) {
  Matrix v(1, 1);
  v(0, 0) = val(a).sum();
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, a, out] {
    nodes_[a].grad.array() += nodes_[out].grad(0, 0);
  };
  return out;
}

Tape::NodeId Tape::mean_all(NodeId a) {
  const double count = static_cast<double>(val(a).size());
  Matrix v(1, 1);
  v(0, 0) = val(a).sum() / count;
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, a, out, count] {
    nodes_[a].grad.array() += nodes_[out].grad(0, 0) / count;
  };
  return out;
}

Tape::NodeId Tape::mean_cols(NodeId a) {
  const double cols = static_cast<double>(val(a).cols());
  NodeId out = emplace(val(a).rowwise().mean(), nullptr);
  nodes_[out].backprop = [this, a, out, cols] {
    nodes_[a].grad.colwise() += (nodes_[out].grad.col(0) / cols).eval();
  };
  return out;
}

Tape::NodeId Tape::mean_rows(NodeId a) {
  const double rows = static_cast<double>(val(a).rows());
  NodeId out = emplace(val(a).colwise().mean(), nullptr);
  nodes_[out].backprop = [this, a, out, rows] {
    nodes_[a].grad.rowwise() += (nodes_[out].grad.row(0) / rows).eval();
  };
  return out;
}

Tape::NodeId Tape::logsumexp_rows(NodeId a) {
  const Matrix& av = val(a);
  Matrix v(av.rows(), 1);
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const double mx = av.row(r).maxCoeff();
    v(r, 0) = mx + std::log((av.row(r).array() - mx).exp().sum());
  }
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, a, out] {
    const Matrix& av2 = val(a);
    const Matrix& lse = nodes_[out].value;
    for (Eigen::Index r = 0; r < av2.rows(); ++r) {
      nodes_[a].grad.row(r).array() +=
          nodes_[out].grad(r, 0) * (av2.row(r).array() - lse(r, 0)).exp();
    }
  };
  return out;
}

Tape::NodeId Tape::logsumexp_cols(NodeId a) {
  const Matrix& av = val(a);
  Matrix v(1, av.cols());
  for (Eigen::Index c = 0; c < av.cols(); ++c) {
    const double mx = av.col(c).maxCoeff();
    v(0, c) = mx + std::log((av.col(c).array() - mx).exp().sum());
  }
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, a, out] {
    const Matrix& av2 = val(a);
    const Matrix& lse = nodes_[out].value;
    for (Eigen::Index c = 0; c < av2.cols(); ++c) {
      nodes_[a].grad.col(c).array() +=
          nodes_[out].grad(0, c) * (av2.col(c).array() - lse(0, c)).exp();
    }
  };
  return out;
}

Tape::NodeId Tape::concat_cols(NodeId a, NodeId b) {
  const Matrix& av = val(a);
  const Matrix& bv = val(b);
  if (av.rows() != bv.rows()) throw NumericError("concat_cols shape mismatch");
  Matrix v(av.rows(), av.cols() + bv.cols());
  v << av, bv;
  NodeId out = emplace(std::move(v), nullptr);
  const int a_cols = static_cast<int>(av.cols());
  const int b_cols = static_cast<int>(bv.cols());
  nodes_[out].backprop = [this, a, b, out, a_cols, b_cols] {
    nodes_[a].grad += nodes_[out].grad.leftCols(a_cols);
    nodes_[b].grad += nodes_[out].grad.rightCols(b_cols);
  };
  return out;
}

Tape::NodeId Tape::concat_rows(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw NumericError("concat_rows: empty part list");
  Eigen::Index rows = 0;
  const Eigen::Index cols = nodes_[parts[0]].value.cols();
  for (NodeId p : parts) {
    if (val(p).cols() != cols) throw NumericError("concat_rows shape mismatch");
    rows += val(p).rows();
  }
  Matrix v(rows, cols);
  Eigen::Index r = 0;
  for (NodeId p : parts) {
    v.middleRows(r, val(p).rows()) = val(p);
    r += val(p).rows();
  }
  NodeId out = emplace(std::move(v), nullptr);
  std::vector<NodeId> parts_copy = parts;
  nodes_[out].backprop = [this, parts_copy, out] {
    Eigen::Index r2 = 0;
    for (NodeId p : parts_copy) {
      const Eigen::Index n = val(p).rows();
      nodes_[p].grad += nodes_[out].grad.middleRows(r2, n);
      r2 += n;
    }
  };
  return out;
}

Tape::NodeId Tape::slice_rows(NodeId a, int first, int count) {
  const Matrix& av = val(a);
  if (first < 0 || count < 1 || first + count > av.rows())
    throw NumericError("slice_rows out of range");
  NodeId out = emplace(av.middleRows(first, count), nullptr);
  nodes_[out].backprop = [this, a, out, first, count] {
    nodes_[a].grad.middleRows(first, count) += nodes_[out].grad;
  };
  return out;
}

Tape::NodeId Tape::select_cols(NodeId a, std::vector<int> col_of_row) {
  const Matrix& av = val(a);
  if (static_cast<Eigen::Index>(col_of_row.size()) != av.rows())
    throw NumericError("select_cols needs one column per row");
  Matrix v(av.rows(), 1);
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const int c = col_of_row[r];
    if (c < 0 || c >= av.cols()) throw NumericError("select_cols column out of range");
    v(r, 0) = av(r, c);
  }
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, a, out, col_of_row] {
    for (size_t r = 0; r < col_of_row.size(); ++r)
      nodes_[a].grad(static_cast<Eigen::Index>(r), col_of_row[r]) +=
          nodes_[out].grad(static_cast<Eigen::Index>(r), 0);
  };
  return out;
}

Tape::NodeId Tape::embed_concat(NodeId table, IntMatrix ids) {
  const Matrix& tv = val(table);
  const int emb = static_cast<int>(tv.cols());
  Matrix v = Matrix::Zero(ids.rows(), ids.cols() * emb);
  for (Eigen::Index r = 0; r < ids.rows(); ++r) {
    for (Eigen::Index t = 0; t < ids.cols(); ++t) {
      const int id = ids(r, t);
      if (id < 0 || id >= tv.rows()) throw NumericError("embedding id out of range");
      if (id == 0) continue;  // pad row stays zero
      v.block(r, t * emb, 1, emb) = tv.row(id);
    }
  }
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, table, out, ids, emb] {
    for (Eigen::Index r = 0; r < ids.rows(); ++r) {
      for (Eigen::Index t = 0; t < ids.cols(); ++t) {
        const int id = ids(r, t);
        if (id == 0) continue;
        nodes_[table].grad.row(id) += nodes_[out].grad.block(r, t * emb, 1, emb);
      }
    }
  };
  return out;
}

Tape::NodeId Tape::embed_sum(NodeId table, IntMatrix ids) {
  const Matrix& tv = val(table);
  const int emb = static_cast<int>(tv.cols());
  Matrix v = Matrix::Zero(ids.rows(), emb);
  for (Eigen::Index r = 0; r < ids.rows(); ++r) {
    for (Eigen::Index t = 0; t < ids.cols(); ++t) {
      const int id = ids(r, t);
      if (id < 0 || id >= tv.rows()) throw NumericError("embedding id out of range");
      if (id == 0) continue;
      v.row(r) += tv.row(id);
    }
  }
  NodeId out = emplace(std::move(v), nullptr);
  nodes_[out].backprop = [this, table, out, ids] {
    for (Eigen::Index r = 0; r < ids.rows(); ++r) {
      for (Eigen::Index t = 0; t < ids.cols(); ++t) {
        const int id = ids(r, t);
        if (id == 0) continue;
        nodes_[table].grad.row(id) += nodes_[out].grad.row(r);
      }
    }
  };
  return out;
}

void Tape::backward(NodeId root) {
  if (val(root).rows() != 1 || val(root).cols() != 1)
    throw NumericError("backward root must be a scalar");
  check_finite(val(root), "backward root");
  for (auto& n : nodes_) {
    const Matrix& v = n.view ? *n.view : n.value;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  nodes_[root].grad(0, 0) = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backprop) it->backprop();
  }
  for (auto& [id, param] : param_leaves_) param->grad += nodes_[id].grad;
  for (ParamStore* store : stores_) store->mark_grads_live();
}

}  // namespace idxlab::nn
