#pragma once

#include "movestat/core/rng.hpp"
#include "movestat/core/types.hpp"
#include "movestat/trajectory/trajectory.hpp"

#include <vector>

namespace movestat {

// Scaling-and-squaring matrix exponential (Eigen's Pade implementation).
Matrix matrix_exponential(const Matrix& m);

// Mean-reverting Gaussian diffusion with centre mu, attraction matrix B
// (stable: all eigenvalue real parts < 0) and equilibrium covariance Lambda.
// Construct through isotropic() unless a full attraction matrix is really
// wanted; general B is accepted via general() with stability enforced.
struct OuParams {
    Vector center;
    Matrix attraction;
    Matrix equilibrium_cov;

    Index dim() const { return center.size(); }

    static OuParams isotropic(Index d, double b, double equilibrium_var, Vector center);
    static OuParams general(Vector center, Matrix attraction, Matrix equilibrium_cov);
};

struct GaussianState {
    Vector mean;
    Matrix cov;
};

GaussianState ou_equilibrium(const OuParams& p);
// Law of U(s + t) given U(s) = u.
GaussianState ou_conditional(const OuParams& p, const Vector& u, double t);

// Conditional covariance over a unit time step; a label-free summary of how
// diffusive each state's movement is.
Matrix ou_unit_time_variance(const OuParams& p);

enum class OuFirstObs { Condition, Equilibrium };

double ou_log_likelihood(const OuParams& p, const Trajectory& traj,
                         OuFirstObs first = OuFirstObs::Condition);

// Exact transition sampling on the given time grid, starting from x0 at
// times.front().
Matrix simulate_ou(const OuParams& p, const std::vector<double>& times, const Vector& x0,
                   Rng& rng);

// Moments of the pinned OU process at interior time t (Gaussian conditioning
// of the Markov transition densities on both endpoints).
GaussianState ou_bridge_marginal(const OuParams& p, const Vector& a, const Vector& b, double t1,
                                 double t2, double t);

// Integrated OU: velocity follows a 1-d OU per coordinate (independent
// coordinates, shared parameters) and position integrates it. The joint
// (position, velocity) transition is Gaussian with closed-form moments.
struct IntegratedOuParams {
    Index dim = 1;
    double b = -1.0;              // attraction rate, < 0
    double equilibrium_var = 1.0;  // per-coordinate velocity variance
    Vector mean_velocity;          // usually zero

    void validate() const;
};

struct IntegratedOuMoments {
    double mean_pos_coef_v = 0.0;   // weight of (v - mu_v) in E[x + dx]
    double var_pos = 0.0;
    double var_vel = 0.0;
    double cov_pos_vel = 0.0;
    double decay = 0.0;             // e^{b dt}
};

IntegratedOuMoments integrated_ou_moments(const IntegratedOuParams& p, double dt);

struct IouPath {
    Matrix positions;
    Matrix velocities;
};

IouPath simulate_integrated_ou(const IntegratedOuParams& p, const Vector& x0, const Vector& v0,
                               const std::vector<double>& times, Rng& rng);

}  // namespace movestat
