#pragma once

#include "movestat/core/types.hpp"

#include <vector>

namespace movestat {

// Generator of a continuous-time Markov chain: nonnegative off-diagonals,
// rows summing to zero.
struct GeneratorMatrix {
    Matrix g;

    explicit GeneratorMatrix(Matrix generator);
    int n_states() const { return static_cast<int>(g.rows()); }
};

struct CtmcViews {
    Vector rates;  // lambda_i = -g_ii
    Matrix jump;   // q_ij = g_ij / lambda_i for i != j; zero rows for absorbing states
};

CtmcViews ctmc_views(const GeneratorMatrix& gen);

// Stationary distribution: pi G = 0, sum(pi) = 1.
Vector ctmc_stationary(const GeneratorMatrix& gen);

struct CtmcSufficientStats {
    Vector holding_times;            // total observed time per state
    Eigen::MatrixXi transition_counts;  // n_ij, zero diagonal

    void validate() const;
};

// Fully observed path likelihood: sum_i -lambda_i t_i + sum_{i!=j} n_ij log(q_ij lambda_i).
// Returns -inf when a counted transition has zero jump probability.
double ctmc_log_likelihood(const Vector& rates, const Matrix& jump,
                           const CtmcSufficientStats& stats);

}  // namespace movestat
