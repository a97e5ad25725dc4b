#include "idxlab/nn.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace idxlab::nn {

namespace {

Matrix uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace

void init_dense(ParamStore& store, const std::string& prefix, int in, int out,
                std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (in + out));
  store.add(prefix + ".W", uniform_matrix(in, out, bound, rng));
  store.add(prefix + ".b", Matrix::Zero(1, out));
}

void init_gru(ParamStore& store, const std::string& prefix, int in, int hidden,
              std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (const char* gate : {"z", "r", "c"}) {
    store.add(prefix + ".W" + gate, uniform_matrix(in, hidden, bound, rng));
    store.add(prefix + ".U" + gate, uniform_matrix(hidden, hidden, bound, rng));
    store.add(prefix + ".b" + gate, Matrix::Zero(1, hidden));
  }
}

void init_bigru(ParamStore& store, const std::string& prefix, int in, int hidden,
                std::mt19937_64& rng) {
  init_gru(store, prefix + ".fwd", in, hidden, rng);
  init_gru(store, prefix + ".bwd", in, hidden, rng);
}

void init_embedding(ParamStore& store, const std::string& name, int vocab, int dim,
                    std::mt19937_64& rng) {
  Matrix table = uniform_matrix(vocab, dim, 0.1, rng);
  table.row(0).setZero();  // pad row, never read or written by embed ops
  store.add(name, std::move(table));
}

Tape::NodeId activate(Tape& tape, Tape::NodeId x, Activation act) {
  switch (act) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return tape.relu(x);
    case Activation::kTanh: return tape.tanh(x);
    case Activation::kSigmoid: return tape.sigmoid(x);
  }
  return x;
}

Tape::NodeId dense(Tape& tape, ParamStore& store, const std::string& prefix, Tape::NodeId x,
                   Activation act) {
  Tape::NodeId w = tape.param(store, prefix + ".W");
  Tape::NodeId b = tape.param(store, prefix + ".b");
  return activate(tape, tape.add_rowvec(tape.matmul(x, w), b), act);
}

std::vector<Tape::NodeId> gru(Tape& tape, ParamStore& store, const std::string& prefix,
                              const std::vector<Tape::NodeId>& steps, bool reverse) {
  if (steps.empty()) throw NumericError("gru: empty sequence");
  const auto wz = tape.param(store, prefix + ".Wz");
  const auto uz = tape.param(store, prefix + ".Uz");
  const auto bz = tape.param(store, prefix + ".bz");
  const auto wr = tape.param(store, prefix + ".Wr");
  const auto ur = tape.param(store, prefix + ".Ur");
  const auto br = tape.param(store, prefix + ".br");
  const auto wc = tape.param(store, prefix + ".Wc");
  const auto uc = tape.param(store, prefix + ".Uc");
  const auto bc = tape.param(store, prefix + ".bc");

  const auto batch = tape.value(steps[0]).rows();
  const auto hidden = tape.value(bz).cols();
  Tape::NodeId h = tape.input(Matrix::Zero(batch, hidden));

  std::vector<Tape::NodeId> states(steps.size());
  for (size_t i = 0; i < steps.size(); ++i) {
    const size_t t = reverse ? steps.size() - 1 - i : i;
    const Tape::NodeId x = steps[t];
    auto z = tape.sigmoid(
        tape.add_rowvec(tape.add(tape.matmul(x, wz), tape.matmul(h, uz)), bz));
    auto r = tape.sigmoid(
        tape.add_rowvec(tape.add(tape.matmul(x, wr), tape.matmul(h, ur)), br));
    auto cand = tape.tanh(tape.add_rowvec(
        tape.add(tape.matmul(x, wc), tape.matmul(tape.mul(r, h), uc)), bc));
    // h' = h + z * (cand - h)
    h = tape.add(h, tape.mul(z, tape.sub(cand, h)));
    states[t] = h;
  }
  return states;
}

std::vector<Tape::NodeId> bigru(Tape& tape, ParamStore& store, const std::string& prefix,
                                const std::vector<Tape::NodeId>& steps) {
  auto fwd = gru(tape, store, prefix + ".fwd", steps, /*reverse=*/false);
  auto bwd = gru(tape, store, prefix + ".bwd", steps, /*reverse=*/true);
  std::vector<Tape::NodeId> out(steps.size());
  for (size_t t = 0; t < steps.size(); ++t) out[t] = tape.concat_cols(fwd[t], bwd[t]);
  return out;
}

GradCheckReport grad_check(const std::function<double(bool)>& f, ParamStore& store, double h,
                           double tol, double denom_floor) {
  store.zero_grads();
  f(true);

  // Snapshot the analytic gradients before probing perturbs anything.
  std::vector<std::pair<std::string, Matrix>> analytic;
  store.for_each([&](const std::string& name, Param& p) { analytic.emplace_back(name, p.grad); });

  GradCheckReport report;
  for (auto& [name, grad] : analytic) {
    Param& p = store.at(name);
    for (int r = 0; r < grad.rows(); ++r) {
      for (int c = 0; c < grad.cols(); ++c) {
        const double saved = p.value(r, c);
        p.value(r, c) = saved + h;
        const double up = f(false);
        p.value(r, c) = saved - h;
        const double down = f(false);
        p.value(r, c) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = grad(r, c);
        const double err = std::abs(a - numeric) /
                           std::max({std::abs(a), std::abs(numeric), denom_floor});
        if (err > report.max_rel_err) {
          report.max_rel_err = err;
          report.worst_param = name;
          report.worst_row = r;
          report.worst_col = c;
        }
      }
    }
  }
  store.zero_grads();
  report.pass = report.max_rel_err <= tol;
  return report;
}

void save_params_file(const std::string& path, const ParamStore& store) {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot write checkpoint: " + path);
  out << store.to_json().dump() << "\n";
}

ParamStore load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NumericError("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  return ParamStore::from_json(j);
}

}  // namespace idxlab::nn
