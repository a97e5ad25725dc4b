#pragma once

#include <random>
#include <vector>

#include "idxlab/tensor.hpp"

namespace idxlab::nn {

// Temperature-scaled balancing of exp(X/tau): L rounds of row-then-column
// normalization, carried out in the log domain so small temperatures cannot
// overflow. Differentiable through every round.
Tape::NodeId sinkhorn(Tape& tape, Tape::NodeId scores, double tau, int iterations);

/// Forward-only convenience wrapper over the tape version.
Matrix sinkhorn(const Matrix& scores, double tau, int iterations);

// Permutation maximizing sum_ij P_ij * M_ij via shortest augmenting paths
// (O(n^3)). Rows are assigned in order and ties resolve to the smallest
// column, so a uniform matrix rounds to the identity.
// Returns col_of_row: row i is assigned to column col_of_row[i].
std::vector<int> solve_assignment(const Matrix& weights);

/// solve_assignment as an N x N 0/1 matrix.
Matrix round_hungarian(const Matrix& doubly_stochastic);

// With probability epsilon, swaps two uniformly chosen distinct rows of the
// permutation matrix; otherwise returns it unchanged.
Matrix explore_swap(const Matrix& permutation, double epsilon, std::mt19937_64& rng);

}  // namespace idxlab::nn
