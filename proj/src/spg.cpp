#include "idxlab/spg.hpp"

#include <nlohmann/json.hpp>

namespace idxlab {

using nn::Matrix;
using nn::Tape;

nn::IntMatrix matrix_state_ids(const MatrixState& state) {
  nn::IntMatrix ids(state.rows, state.cols);
  for (int r = 0; r < state.rows; ++r)
    for (int c = 0; c < state.cols; ++c) ids(r, c) = state.at(r, c);
  return ids;
}

SpgAgent::SpgAgent(SpgConfig config)
    : config_(config), buffer_(config.replay), rng_(config.seed) {
  if (config_.vocab_size < 1) throw SchemaError("spg: vocab_size not set");
  nn::init_embedding(actor_, "embed", config_.vocab_size, config_.embed_dim, rng_);
  nn::init_bigru(actor_, "rnn", config_.embed_dim, config_.hidden_dim, rng_);
  nn::init_dense(actor_, "head", 2 * config_.hidden_dim, config_.state_rows, rng_);

  nn::init_embedding(critic_, "embed", config_.vocab_size, config_.embed_dim, rng_);
  {
    // permutation rows are one-hot; this acts as a position embedding table
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    Matrix pemb(config_.state_rows, config_.embed_dim);
    for (int r = 0; r < pemb.rows(); ++r)
      for (int c = 0; c < pemb.cols(); ++c) pemb(r, c) = dist(rng_);
    critic_.add("pembed", std::move(pemb));
  }
  nn::init_bigru(critic_, "rnn", config_.embed_dim, config_.hidden_dim, rng_);
  nn::init_dense(critic_, "head", 2 * config_.hidden_dim, 1, rng_);
}

Tape::NodeId SpgAgent::actor_forward(Tape& tape, const nn::IntMatrix& state) {
  auto table = tape.param(actor_, "embed");
  auto row_feat = tape.embed_sum(table, state);  // N x E
  std::vector<Tape::NodeId> steps;
  steps.reserve(config_.state_rows);
  for (int t = 0; t < config_.state_rows; ++t) steps.push_back(tape.slice_rows(row_feat, t, 1));
  auto rnn_out = nn::bigru(tape, actor_, "rnn", steps);
  auto features = tape.concat_rows(rnn_out);  // N x 2H
  auto scores = nn::dense(tape, actor_, "head", features, nn::Activation::kIdentity);  // N x N
  return nn::sinkhorn(tape, scores, config_.tau, config_.sinkhorn_iterations);
}

Tape::NodeId SpgAgent::critic_forward(Tape& tape, const nn::IntMatrix& state,
                                      Tape::NodeId action) {
  auto table = tape.param(critic_, "embed");
  auto state_feat = tape.embed_sum(table, state);                       // N x E
  auto action_feat = tape.matmul(action, tape.param(critic_, "pembed"));  // N x E
  auto summed = tape.add(state_feat, action_feat);
  std::vector<Tape::NodeId> steps;
  steps.reserve(config_.state_rows);
  for (int t = 0; t < config_.state_rows; ++t) steps.push_back(tape.slice_rows(summed, t, 1));
  auto rnn_out = nn::bigru(tape, critic_, "rnn", steps);
  auto pooled = tape.mean_rows(tape.concat_rows(rnn_out));  // 1 x 2H
  return nn::dense(tape, critic_, "head", pooled, nn::Activation::kIdentity);  // 1 x 1
}

nn::Matrix SpgAgent::relaxed_action(const nn::IntMatrix& state) {
  Tape tape;
  return tape.value(actor_forward(tape, state));
}

PermutationAction SpgAgent::act(const MatrixState& state, double epsilon) {
  PermutationAction action;
  action.relaxed = relaxed_action(matrix_state_ids(state));
  Matrix rounded = nn::round_hungarian(action.relaxed);
  action.hard = nn::explore_swap(rounded, epsilon, rng_);
  return action;
}

double SpgAgent::critic_value(const nn::IntMatrix& state, const nn::Matrix& permutation) {
  Tape tape;
  auto q = critic_forward(tape, state, tape.input(permutation));
  return tape.value(q)(0, 0);
}

void SpgAgent::push(SpgTransition t) {
  const double delta = t.reward - critic_value(t.state, t.action);
  buffer_.push(std::move(t), std::abs(delta));
}

bool SpgAgent::ready_to_train() const {
  return buffer_.size() >= static_cast<size_t>(config_.warmup) &&
         buffer_.size() >= static_cast<size_t>(config_.batch_size);
}

SpgAgent::Batch SpgAgent::sample_batch() { return buffer_.sample(config_.batch_size, rng_); }

double SpgAgent::critic_update(const Batch& batch) {
  const size_t b = batch.indices.size();
  Tape tape;
  std::vector<Tape::NodeId> losses(b);
  for (size_t i = 0; i < b; ++i) {
    const SpgTransition& t = buffer_.at(batch.indices[i]);
    auto q = critic_forward(tape, t.state, tape.input(t.action));
    auto diff = tape.sub(q, tape.input(Matrix::Constant(1, 1, t.reward)));
    losses[i] = tape.scale(tape.mul(diff, diff), 0.5);
  }
  Matrix weights(b, 1);
  for (size_t i = 0; i < b; ++i) weights(static_cast<Eigen::Index>(i), 0) = batch.weights[i];
  auto loss =
      tape.mean_all(tape.mul(tape.concat_rows(losses), tape.input(std::move(weights))));

  const double loss_value = tape.value(loss)(0, 0);
  critic_.zero_grads();
  tape.backward(loss);
  critic_.clip_grad_global_norm(config_.grad_clip);
  critic_.adam_step(config_.lr_critic);
  return loss_value;
}

double SpgAgent::actor_update(const Batch& batch) {
  const size_t b = batch.indices.size();
  Tape tape;
  std::vector<Tape::NodeId> qs(b);
  for (size_t i = 0; i < b; ++i) {
    const SpgTransition& t = buffer_.at(batch.indices[i]);
    auto relaxed = actor_forward(tape, t.state);
    qs[i] = critic_forward(tape, t.state, relaxed);
  }
  auto objective = tape.mean_all(tape.concat_rows(qs));
  auto loss = tape.scale(objective, -1.0);  // ascend Q

  const double objective_value = tape.value(objective)(0, 0);
  actor_.zero_grads();
  critic_.zero_grads();
  tape.backward(loss);
  actor_.clip_grad_global_norm(config_.grad_clip);
  actor_.adam_step(config_.lr_actor);
  critic_.zero_grads();  // critic stays frozen; its gradients are discarded
  return objective_value;
}

void SpgAgent::refresh_priorities(const Batch& batch) {
  for (size_t idx : batch.indices) {
    const SpgTransition& t = buffer_.at(idx);
    const double delta = t.reward - critic_value(t.state, t.action);
    buffer_.update_priority(idx, std::abs(delta));
  }
}

double SpgAgent::update() {
  const Batch batch = sample_batch();
  const double critic_loss = critic_update(batch);
  refresh_priorities(batch);
  last_actor_objective_ = actor_update(batch);
  return critic_loss;
}

nlohmann::json SpgAgent::checkpoint() const {
  return nlohmann::json{{"actor", actor_.to_json()}, {"critic", critic_.to_json()}};
}

void SpgAgent::restore(const nlohmann::json& j) {
  actor_ = nn::ParamStore::from_json(j.at("actor"));
  critic_ = nn::ParamStore::from_json(j.at("critic"));
}

}  // namespace idxlab
