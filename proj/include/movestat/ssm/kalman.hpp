#pragma once

#include "movestat/core/types.hpp"

#include <vector>

namespace movestat {

// Linear-Gaussian state space model
//   z_t = A z_{t-1} + b + N(0, Sigma_z)
//   y_t = H z_t + N(0, Sigma_y)
// with z at the first observation time having prior N(init_mean, init_cov).
struct LinearGaussianSsmSpec {
    Matrix transition;     // A, d x d
    Vector offset;         // b, d
    Matrix process_cov;    // Sigma_z
    Matrix obs_matrix;     // H, m x d
    Matrix obs_cov;        // Sigma_y, m x m
    Vector init_mean;
    Matrix init_cov;

    Index state_dim() const { return transition.rows(); }
    Index obs_dim() const { return obs_matrix.rows(); }
    void validate() const;

    // Identity random walk observed directly, isotropic noise.
    static LinearGaussianSsmSpec random_walk(Index d, double process_var, double obs_var,
                                             Vector init_mean, Matrix init_cov);
};

struct KalmanResult {
    std::vector<Vector> predicted_mean;
    std::vector<Matrix> predicted_cov;
    std::vector<Vector> filtered_mean;
    std::vector<Matrix> filtered_cov;
    Vector loglik_increments;  // zero at missing observations
    double log_likelihood = 0.0;
};

// Exact Gaussian filtering; rows of obs flagged missing skip the update step.
KalmanResult kalman_filter(const LinearGaussianSsmSpec& spec, const Matrix& obs,
                           const std::vector<bool>& missing = {});

struct SmootherResult {
    std::vector<Vector> mean;
    std::vector<Matrix> cov;
};

SmootherResult kalman_smoother(const LinearGaussianSsmSpec& spec, const KalmanResult& filter);

}  // namespace movestat
