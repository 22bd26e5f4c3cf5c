#pragma once

#include "movestat/core/rng.hpp"
#include "movestat/core/types.hpp"
#include "movestat/trajectory/trajectory.hpp"

#include <vector>

namespace movestat {

struct BrownianSpec {
    Matrix cov;  // covariance rate, d x d PSD

    Index dim() const { return cov.rows(); }
    void validate() const;
    static BrownianSpec isotropic(Index d, double sigma2);
};

// Sum of Gaussian increment log densities with covariance dt * Sigma, taken
// over consecutive observed positions.
double bm_log_likelihood(const BrownianSpec& spec, const Trajectory& traj);

struct BridgeMoments {
    Vector mean;
    double variance = 0.0;  // per coordinate (isotropic)
};

// Moments of Brownian motion pinned at (t1, a) and (t2, b), evaluated at t.
BridgeMoments brownian_bridge_marginal(const Vector& a, const Vector& b, double t1, double t2,
                                       double sigma2, double t);

// Sequential conditional sampling of the pinned process at ascending query
// times inside [t1, t2]; marginals match brownian_bridge_marginal.
Matrix sample_bridge_path(const Vector& a, const Vector& b, double t1, double t2, double sigma2,
                          const std::vector<double>& times, Rng& rng);

}  // namespace movestat
