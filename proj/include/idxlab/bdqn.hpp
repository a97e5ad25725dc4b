#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "idxlab/converter.hpp"
#include "idxlab/nn.hpp"
#include "idxlab/replay.hpp"

namespace idxlab {

struct BdqnConfig {
  int vocab_size = 0;
  int flat_len = 32;
  int n_max = 3;
  int m_streams = 3;
  int embed_dim = 128;
  int trunk_dim = 128;
  int stream_dim = 32;
  double lr = 0.001;
  double gamma = 0.9;
  int target_sync_every = 100;  // updates between target-network syncs
  int batch_size = 32;
  int warmup = 256;  // transitions before updates start
  double grad_clip = 10.0;
  ReplayConfig replay{};  // uniform by default
  uint64_t seed = 0;

  int actions_per_stream() const { return n_max + 1; }
};

struct BdqnTransition {
  std::vector<int> state;
  std::vector<int> action;  // one choice per stream
  double reward = 0.0;
  std::optional<std::vector<int>> next_state;  // nullopt marks end of episode
};

// Q-learner with one advantage stream per candidate index key over a shared
// trunk, a common state-value head, and targets averaged across streams.
class BdqnAgent {
 public:
  explicit BdqnAgent(BdqnConfig config);

  CompactAction act(const FlatState& state, double epsilon);

  /// Per-stream Q rows for one state, evaluated with the online network.
  std::vector<Eigen::RowVectorXd> q_values(const std::vector<int>& state);

  /// r + gamma * mean over streams of max stream-Q at next state; r if terminal.
  double target(const BdqnTransition& t);

  void push(BdqnTransition t);
  bool ready_to_train() const;
  /// One batch update; returns the pre-step loss.
  double update();
  void sync_target();

  size_t buffer_size() const { return buffer_.size(); }
  int64_t update_count() const { return updates_; }
  const BdqnConfig& config() const { return config_; }
  nn::ParamStore& net() { return net_; }
  nn::ParamStore& target_net() { return target_; }

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);

 private:
  struct Forward {
    nn::Tape::NodeId trunk;
    std::vector<nn::Tape::NodeId> stream_q;  // B x (n_max+1) each
  };
  Forward forward(nn::Tape& tape, nn::ParamStore& store, const nn::IntMatrix& states);

  BdqnConfig config_;
  nn::ParamStore net_;
  nn::ParamStore target_;
  ReplayBuffer<BdqnTransition> buffer_;
  std::mt19937_64 rng_;
  int64_t updates_ = 0;
};

}  // namespace idxlab
