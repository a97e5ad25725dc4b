#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "idxlab/converter.hpp"
#include "idxlab/nn.hpp"
#include "idxlab/replay.hpp"
#include "idxlab/sinkhorn.hpp"

namespace idxlab {

struct SpgConfig {
  int vocab_size = 0;
  int state_rows = 4;       // N = n_max + 1
  int row_token_budget = 8; // K
  int embed_dim = 48;
  int hidden_dim = 48;      // per direction
  double lr_actor = 0.005;
  double lr_critic = 0.001;
  double tau = 0.05;
  int sinkhorn_iterations = 10;
  int batch_size = 32;
  int warmup = 256;
  double grad_clip = 10.0;
  ReplayConfig replay{4096, ReplayMode::kPrioritized, 0.6, 0.4, 1e-3};
  uint64_t seed = 0;
};

struct SpgTransition {
  nn::IntMatrix state;  // N x K token ids
  nn::Matrix action;    // hard permutation actually applied
  double reward = 0.0;
};

nn::IntMatrix matrix_state_ids(const MatrixState& state);

// Deterministic permutation policy with a critic over (state, permutation)
// pairs. The actor relaxes its score matrix through the balancing operator;
// rounding is not differentiated, so actor updates push gradients through the
// relaxed matrix while the critic is trained on the hard action taken.
class SpgAgent {
 public:
  explicit SpgAgent(SpgConfig config);

  /// Score matrix -> relaxed matrix -> rounded permutation -> epsilon row swap.
  PermutationAction act(const MatrixState& state, double epsilon);

  double critic_value(const nn::IntMatrix& state, const nn::Matrix& permutation);

  void push(SpgTransition t);
  bool ready_to_train() const;

  using Batch = ReplayBuffer<SpgTransition>::Batch;
  Batch sample_batch();
  /// Weighted regression of Q(s, P) onto the observed reward; critic step only.
  double critic_update(const Batch& batch);
  /// Ascends mean Q(s, relaxed(s)); actor step only, critic untouched.
  double actor_update(const Batch& batch);
  /// Priorities refreshed to |r - Q(s, P)| under the current critic.
  void refresh_priorities(const Batch& batch);

  /// One training round: sample, critic step, refresh priorities, actor step.
  /// Returns the critic loss; the actor objective lands in last_actor_objective().
  double update();
  double last_actor_objective() const { return last_actor_objective_; }

  size_t buffer_size() const { return buffer_.size(); }
  const SpgConfig& config() const { return config_; }
  nn::ParamStore& actor() { return actor_; }
  nn::ParamStore& critic() { return critic_; }

  /// Relaxed matrix for one state (forward only).
  nn::Matrix relaxed_action(const nn::IntMatrix& state);

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);

 private:
  nn::Tape::NodeId actor_forward(nn::Tape& tape, const nn::IntMatrix& state);
  nn::Tape::NodeId critic_forward(nn::Tape& tape, const nn::IntMatrix& state,
                                  nn::Tape::NodeId action);

  SpgConfig config_;
  nn::ParamStore actor_;
  nn::ParamStore critic_;
  ReplayBuffer<SpgTransition> buffer_;
  std::mt19937_64 rng_;
  double last_actor_objective_ = 0.0;
};

}  // namespace idxlab
