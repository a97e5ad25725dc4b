#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace idxlab {

enum class ReplayMode { kUniform, kPrioritized };

struct ReplayConfig {
  size_t capacity = 4096;
  ReplayMode mode = ReplayMode::kUniform;
  double alpha = 0.6;         // priority exponent
  double beta = 0.4;          // importance-weight exponent
  double priority_eps = 1e-3; // keeps zero-error items sampleable
};

/// Ring buffer with uniform or proportional-priority sampling.
template <typename TransitionT>
class ReplayBuffer {
 public:
  struct Batch {
    std::vector<size_t> indices;
    std::vector<double> weights;  // importance weights, max-normalized; all 1 when uniform
  };

  explicit ReplayBuffer(ReplayConfig config) : config_(config) {
    if (config_.capacity < 1) throw std::invalid_argument("replay capacity must be >= 1");
  }

  void push(TransitionT t, double priority = 1.0) {
    if (items_.size() < config_.capacity) {
      items_.push_back(std::move(t));
      priorities_.push_back(std::abs(priority));
    } else {
      items_[write_pos_] = std::move(t);
      priorities_[write_pos_] = std::abs(priority);
      write_pos_ = (write_pos_ + 1) % config_.capacity;
    }
  }

  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  TransitionT& at(size_t i) { return items_[i]; }
  const TransitionT& at(size_t i) const { return items_[i]; }

  void update_priority(size_t i, double priority) { priorities_[i] = std::abs(priority); }

  Batch sample(size_t batch_size, std::mt19937_64& rng) const {
    if (items_.empty()) throw std::runtime_error("sample from empty replay buffer");
    Batch batch;
    batch.indices.reserve(batch_size);
    batch.weights.assign(batch_size, 1.0);

    if (config_.mode == ReplayMode::kUniform) {
      std::uniform_int_distribution<size_t> pick(0, items_.size() - 1);
      for (size_t i = 0; i < batch_size; ++i) batch.indices.push_back(pick(rng));
      return batch;
    }

    // Proportional sampling: P(i) ~ (|priority_i| + eps)^alpha, with replacement.
    std::vector<double> cumulative(items_.size());
    double total = 0.0;
    for (size_t i = 0; i < items_.size(); ++i) {
      total += std::pow(priorities_[i] + config_.priority_eps, config_.alpha);
      cumulative[i] = total;
    }
    std::uniform_real_distribution<double> unit(0.0, total);
    for (size_t i = 0; i < batch_size; ++i) {
      const double u = unit(rng);
      const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
      batch.indices.push_back(
          std::min(items_.size() - 1,
                   static_cast<size_t>(std::distance(cumulative.begin(), it))));
    }

    // w_i = (N * P(i))^-beta, normalized by the largest weight in the buffer
    // (attained at the smallest probability).
    const double n = static_cast<double>(items_.size());
    double min_prob = 1.0;
    for (size_t i = 0; i < items_.size(); ++i) {
      const double share = std::pow(priorities_[i] + config_.priority_eps, config_.alpha) / total;
      if (share < min_prob) min_prob = share;
    }
    const double max_weight = std::pow(n * min_prob, -config_.beta);
    for (size_t i = 0; i < batch_size; ++i) {
      const double share =
          std::pow(priorities_[batch.indices[i]] + config_.priority_eps, config_.alpha) / total;
      batch.weights[i] = std::pow(n * share, -config_.beta) / max_weight;
    }
    return batch;
  }

  const ReplayConfig& config() const { return config_; }

 private:
  ReplayConfig config_;
  std::vector<TransitionT> items_;
  std::vector<double> priorities_;
  size_t write_pos_ = 0;
};

}  // namespace idxlab
