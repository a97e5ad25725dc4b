#include "idxlab/bdqn.hpp"

#include <nlohmann/json.hpp>

namespace idxlab {

using nn::Matrix;
using nn::Tape;

namespace {

std::string stream_prefix(int d) { return "stream" + std::to_string(d); }

void init_params(nn::ParamStore& store, const BdqnConfig& cfg, std::mt19937_64& rng) {
  nn::init_embedding(store, "embed", cfg.vocab_size, cfg.embed_dim, rng);
  nn::init_dense(store, "trunk", cfg.flat_len * cfg.embed_dim, cfg.trunk_dim, rng);
  nn::init_dense(store, "value.h", cfg.trunk_dim, cfg.stream_dim, rng);
  nn::init_dense(store, "value.out", cfg.stream_dim, 1, rng);
  for (int d = 0; d < cfg.m_streams; ++d) {
    nn::init_dense(store, stream_prefix(d) + ".h", cfg.trunk_dim, cfg.stream_dim, rng);
    nn::init_dense(store, stream_prefix(d) + ".out", cfg.stream_dim, cfg.actions_per_stream(), rng);
  }
}

nn::IntMatrix stack_states(const std::vector<const std::vector<int>*>& states, int flat_len) {
  nn::IntMatrix ids(states.size(), flat_len);
  for (size_t b = 0; b < states.size(); ++b) {
    for (int t = 0; t < flat_len; ++t) ids(static_cast<Eigen::Index>(b), t) = (*states[b])[t];
  }
  return ids;
}

}  // namespace

BdqnAgent::BdqnAgent(BdqnConfig config)
    : config_(config), buffer_(config.replay), rng_(config.seed) {
  if (config_.vocab_size < 1) throw SchemaError("bdqn: vocab_size not set");
  init_params(net_, config_, rng_);
  init_params(target_, config_, rng_);
  target_.copy_values_from(net_);
}

BdqnAgent::Forward BdqnAgent::forward(Tape& tape, nn::ParamStore& store,
                                      const nn::IntMatrix& states) {
  auto table = tape.param(store, "embed");
  auto flat = tape.embed_concat(table, states);
  auto trunk = nn::dense(tape, store, "trunk", flat, nn::Activation::kRelu);

  auto value_h = nn::dense(tape, store, "value.h", trunk, nn::Activation::kRelu);
  auto value = nn::dense(tape, store, "value.out", value_h, nn::Activation::kIdentity);  // B x 1

  Forward fwd;
  fwd.trunk = trunk;
  for (int d = 0; d < config_.m_streams; ++d) {
    auto h = nn::dense(tape, store, stream_prefix(d) + ".h", trunk, nn::Activation::kRelu);
    auto adv = nn::dense(tape, store, stream_prefix(d) + ".out", h, nn::Activation::kIdentity);
    // dueling combination: Q_d = V + A_d - mean_a A_d
    auto centered = tape.sub_colvec(adv, tape.mean_cols(adv));
    fwd.stream_q.push_back(tape.add_colvec(centered, value));
  }
  return fwd;
}

std::vector<Eigen::RowVectorXd> BdqnAgent::q_values(const std::vector<int>& state) {
  Tape tape;
  auto fwd = forward(tape, net_, stack_states({&state}, config_.flat_len));
  std::vector<Eigen::RowVectorXd> out;
  out.reserve(config_.m_streams);
  for (auto q : fwd.stream_q) out.push_back(tape.value(q).row(0));
  return out;
}

CompactAction BdqnAgent::act(const FlatState& state, double epsilon) {
  const auto qs = q_values(state.token_ids);
  CompactAction action;
  action.choices.resize(config_.m_streams);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> uniform_choice(0, config_.actions_per_stream() - 1);
  for (int d = 0; d < config_.m_streams; ++d) {
    if (unit(rng_) < epsilon) {
      action.choices[d] = uniform_choice(rng_);
    } else {
      int best = 0;
      for (int a = 1; a < config_.actions_per_stream(); ++a) {
        if (qs[d](a) > qs[d](best)) best = a;  // ties keep the smallest index
      }
      action.choices[d] = best;
    }
  }
  return action;
}

double BdqnAgent::target(const BdqnTransition& t) {
  if (!t.next_state.has_value()) return t.reward;
  Tape tape;
  auto fwd = forward(tape, target_, stack_states({&*t.next_state}, config_.flat_len));
  double mean_max = 0.0;
  for (auto q : fwd.stream_q) mean_max += tape.value(q).row(0).maxCoeff();
  mean_max /= static_cast<double>(config_.m_streams);
  return t.reward + config_.gamma * mean_max;
}

void BdqnAgent::push(BdqnTransition t) { buffer_.push(std::move(t), 1.0); }

bool BdqnAgent::ready_to_train() const {
  return buffer_.size() >= static_cast<size_t>(config_.warmup) &&
         buffer_.size() >= static_cast<size_t>(config_.batch_size);
}

double BdqnAgent::update() {
  const auto batch = buffer_.sample(config_.batch_size, rng_);
  const size_t b = batch.indices.size();

  std::vector<const std::vector<int>*> states(b);
  std::vector<double> targets(b);
  std::vector<const std::vector<int>*> next_states;
  std::vector<size_t> next_owner;
  for (size_t i = 0; i < b; ++i) {
    const BdqnTransition& t = buffer_.at(batch.indices[i]);
    states[i] = &t.state;
    targets[i] = t.reward;
    if (t.next_state.has_value()) {
      next_states.push_back(&*t.next_state);
      next_owner.push_back(i);
    }
  }
  if (!next_states.empty()) {
    Tape target_tape;
    auto tf = forward(target_tape, target_, stack_states(next_states, config_.flat_len));
    for (size_t k = 0; k < next_states.size(); ++k) {
      double mean_max = 0.0;
      for (auto q : tf.stream_q)
        mean_max += target_tape.value(q).row(static_cast<Eigen::Index>(k)).maxCoeff();
      targets[next_owner[k]] +=
          config_.gamma * mean_max / static_cast<double>(config_.m_streams);
    }
  }

  Tape tape;
  auto fwd = forward(tape, net_, stack_states(states, config_.flat_len));

  Matrix target_col(b, 1);
  for (size_t i = 0; i < b; ++i) target_col(static_cast<Eigen::Index>(i), 0) = targets[i];
  auto target_node = tape.input(target_col);

  Matrix weight_col(b, 1);
  for (size_t i = 0; i < b; ++i) weight_col(static_cast<Eigen::Index>(i), 0) = batch.weights[i];
  auto weight_node = tape.input(weight_col);

  // loss = mean over batch and streams of 1/2 (target - Q_d(s, a_d))^2
  Tape::NodeId loss = tape.input(Matrix::Zero(1, 1));
  for (int d = 0; d < config_.m_streams; ++d) {
    std::vector<int> chosen(b);
    for (size_t i = 0; i < b; ++i) chosen[i] = buffer_.at(batch.indices[i]).action[d];
    auto q_sel = tape.select_cols(fwd.stream_q[d], chosen);
    auto diff = tape.sub(q_sel, target_node);
    auto weighted = tape.mul(tape.mul(diff, diff), weight_node);
    loss = tape.add(loss, tape.scale(tape.mean_all(weighted), 0.5));
  }
  loss = tape.scale(loss, 1.0 / static_cast<double>(config_.m_streams));

  const double loss_value = tape.value(loss)(0, 0);
  net_.zero_grads();
  tape.backward(loss);
  net_.clip_grad_global_norm(config_.grad_clip);
  net_.adam_step(config_.lr);

  ++updates_;
  if (config_.target_sync_every > 0 && updates_ % config_.target_sync_every == 0) sync_target();
  return loss_value;
}

void BdqnAgent::sync_target() { target_.copy_values_from(net_); }

nlohmann::json BdqnAgent::checkpoint() const {
  return nlohmann::json{{"net", net_.to_json()}, {"target", target_.to_json()},
                        {"updates", updates_}};
}

void BdqnAgent::restore(const nlohmann::json& j) {
  net_ = nn::ParamStore::from_json(j.at("net"));
  target_ = nn::ParamStore::from_json(j.at("target"));
  updates_ = j.at("updates").get<int64_t>();
}

}  // namespace idxlab
