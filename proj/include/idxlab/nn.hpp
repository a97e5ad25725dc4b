#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "idxlab/tensor.hpp"

namespace idxlab::nn {

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

// Parameter initialization. Dense: uniform +-sqrt(6/(fan_in+fan_out)), zero
// bias. Recurrent: uniform +-1/sqrt(hidden). Embedding: uniform +-0.1 with a
// zero pad row.
void init_dense(ParamStore& store, const std::string& prefix, int in, int out,
                std::mt19937_64& rng);
void init_gru(ParamStore& store, const std::string& prefix, int in, int hidden,
              std::mt19937_64& rng);
void init_bigru(ParamStore& store, const std::string& prefix, int in, int hidden,
                std::mt19937_64& rng);
void init_embedding(ParamStore& store, const std::string& name, int vocab, int dim,
                    std::mt19937_64& rng);

/// activation(x W + b) with parameters `prefix.W`, `prefix.b`.
Tape::NodeId dense(Tape& tape, ParamStore& store, const std::string& prefix, Tape::NodeId x,
                   Activation act);

Tape::NodeId activate(Tape& tape, Tape::NodeId x, Activation act);

/// Gated recurrent sweep over a sequence of B x E steps; returns B x H states.
std::vector<Tape::NodeId> gru(Tape& tape, ParamStore& store, const std::string& prefix,
                              const std::vector<Tape::NodeId>& steps, bool reverse);

/// Forward and backward sweeps concatenated per position: B x 2H each.
std::vector<Tape::NodeId> bigru(Tape& tape, ParamStore& store, const std::string& prefix,
                                const std::vector<Tape::NodeId>& steps);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_row = 0;
  int worst_col = 0;
  bool pass = true;
};

// Central-difference check of every parameter entry in `store` against the
// analytic gradients `f` produces. f(true) must run forward+backward and
// return the scalar; f(false) forward only. Relative error uses
// |a-n| / max(|a|, |n|, denom_floor).
GradCheckReport grad_check(const std::function<double(bool)>& f, ParamStore& store, double h,
                           double tol, double denom_floor = 1e-3);

void save_params_file(const std::string& path, const ParamStore& store);
ParamStore load_params_file(const std::string& path);

}  // namespace idxlab::nn
