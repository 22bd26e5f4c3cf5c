#pragma once

#include "movestat/core/optim.hpp"
#include "movestat/ssm/kalman.hpp"

#include <vector>

namespace movestat {

// Observation-error family attached per coordinate: exact Gaussian, or
// heavy-tailed Student-t with the given scale and degrees of freedom.
struct ObsErrorModel {
    enum class Kind { Gaussian, StudentT };
    Kind kind = Kind::Gaussian;
    double scale = 1.0;  // sd for Gaussian, scale for Student-t
    double df = 5.0;     // Student-t only

    void validate() const;
};

// Linear-Gaussian core with the observation errors replaced by independent
// per-coordinate draws from obs_error. Requires an identity observation map.
struct HeavyTailSsmSpec {
    LinearGaussianSsmSpec core;
    ObsErrorModel obs_error;

    void validate() const;
};

struct LaplaceResult {
    double log_marginal = 0.0;
    Matrix latent_mode;  // T x d
    int newton_iterations = 0;
    bool converged = false;
    double grad_max_norm = 0.0;
    std::vector<double> objective_trace;  // joint log density per Newton iteration
};

// Approximate marginal log-likelihood: the joint log density is maximized
// over the latent states by Newton steps on the block-tridiagonal Hessian,
// then the Gaussian integral correction is added at the mode. Exact when the
// observation errors are Gaussian.
LaplaceResult laplace_marginal(const HeavyTailSsmSpec& spec, const Matrix& obs,
                               const std::vector<bool>& missing = {},
                               const Matrix* warm_start = nullptr);

struct LaplaceFit {
    double sigma_z = 0.0;
    double sigma_y = 0.0;
    double nu = 0.0;        // meaningful only for Student-t errors
    Vector theta;           // working scale: (log sigma_z, log sigma_y[, log nu])
    Vector std_errors;      // on the working scale, from the outer Hessian
    double log_marginal = 0.0;
    bool converged = false;
    OptimResult opt;
};

// Outer quasi-Newton maximization of the Laplace marginal over
// (sigma_z, sigma_y[, nu]) on log scale.
LaplaceFit fit_laplace(const HeavyTailSsmSpec& spec_template, const Matrix& obs,
                       const std::vector<bool>& missing, const Vector& init_theta,
                       const OptimOptions& options = {});

}  // namespace movestat
