#include "idxlab/sinkhorn.hpp"

#include <cmath>
#include <limits>

namespace idxlab::nn {

Tape::NodeId sinkhorn(Tape& tape, Tape::NodeId scores, double tau, int iterations) {
  if (tau <= 0.0) throw NumericError("sinkhorn: tau must be positive");
  if (iterations < 1) throw NumericError("sinkhorn: iteration count must be >= 1");
  const Matrix& x = tape.value(scores);
  if (x.rows() != x.cols()) throw NumericError("sinkhorn: scores must be square");
  if (!x.allFinite()) throw NumericError("sinkhorn: non-finite scores");

  Tape::NodeId log_m = tape.scale(scores, 1.0 / tau);
  for (int i = 0; i < iterations; ++i) {
    log_m = tape.sub_colvec(log_m, tape.logsumexp_rows(log_m));  // rows sum to 1
    log_m = tape.sub_rowvec(log_m, tape.logsumexp_cols(log_m));  // cols sum to 1
  }
  return tape.exp(log_m);
}

Matrix sinkhorn(const Matrix& scores, double tau, int iterations) {
  Tape tape;
  return tape.value(sinkhorn(tape, tape.input(scores), tau, iterations));
}

std::vector<int> solve_assignment(const Matrix& weights) {
  const int n = static_cast<int>(weights.rows());
  if (weights.cols() != n) throw NumericError("solve_assignment: matrix must be square");
  if (n == 0) return {};

  // Shortest-augmenting-path assignment on negated weights (1-based buffers).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);

  auto costAt = [&](int i, int j) { return -weights(i - 1, j - 1); };

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = costAt(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j) col_of_row[match[j] - 1] = j - 1;
  return col_of_row;
}

Matrix round_hungarian(const Matrix& doubly_stochastic) {
  const auto assignment = solve_assignment(doubly_stochastic);
  const int n = static_cast<int>(assignment.size());
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, assignment[i]) = 1.0;
  return p;
}

Matrix explore_swap(const Matrix& permutation, double epsilon, std::mt19937_64& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw NumericError("explore_swap: epsilon out of range");
  const int n = static_cast<int>(permutation.rows());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (n < 2 || unit(rng) >= epsilon) return permutation;
  std::uniform_int_distribution<int> pick(0, n - 1);
  const int a = pick(rng);
  int b = pick(rng);
  while (b == a) b = pick(rng);
  Matrix swapped = permutation;
  swapped.row(a).swap(swapped.row(b));
  return swapped;
}

}  // namespace idxlab::nn
