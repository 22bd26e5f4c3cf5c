#pragma once

#include "movestat/core/rng.hpp"
#include "movestat/core/types.hpp"
#include "movestat/trajectory/trajectory.hpp"

#include <functional>
#include <vector>

namespace movestat {

// General diffusion dX = A(t, X) dt + B(t, X) dW, handled through the normal
// (Euler) approximation over each time step.
struct SdeSpec {
    Index dim = 0;
    std::function<Vector(double, const Vector&)> drift;
    std::function<Matrix(double, const Vector&)> diffusion;

    void validate() const;

    // Drift from the negative gradient of a potential, constant diffusion.
    static SdeSpec from_potential_gradient(Index dim,
                                           std::function<Vector(const Vector&)> potential_grad,
                                           Matrix diffusion_coef);
};

Matrix euler_simulate(const SdeSpec& spec, const Vector& x0, const std::vector<double>& times,
                      Rng& rng);

// Log likelihood of the observed increments under the per-step normal
// approximation N(x + A dt, B B' dt).
double euler_log_likelihood(const SdeSpec& spec, const Trajectory& traj);

}  // namespace movestat
