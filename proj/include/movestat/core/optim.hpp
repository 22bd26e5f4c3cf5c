#pragma once

#include "movestat/core/types.hpp"

#include <cstdint>
#include <functional>

namespace movestat {

using ObjectiveFn = std::function<double(const Vector&)>;

struct OptimOptions {
    int max_iterations = 500;
    double grad_tol = 1e-6;      // convergence on max-norm of the gradient
    double f_tol = 1e-12;        // relative objective-change stall tolerance
    double fd_step = 1e-6;       // central-difference step, scaled by 1 + |x_i|
    int max_line_search = 40;
};

struct OptimResult {
    Vector x;
    double value = 0.0;
    double grad_norm = 0.0;  // max-norm at the returned point
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

Vector fd_gradient(const ObjectiveFn& f, const Vector& x, double step_rel = 1e-6);
Matrix fd_hessian(const ObjectiveFn& f, const Vector& x, double step_rel = 1e-4);

// Quasi-Newton (BFGS) minimizer with central finite-difference gradients and
// backtracking Armijo line search.
OptimResult minimize_bfgs(const ObjectiveFn& f, const Vector& x0,
                          const OptimOptions& options = {});

struct MultiStartResult {
    OptimResult best;
    int n_starts = 0;
    int n_converged = 0;
};

// Restarted minimization: the first start is x0, the remaining ones perturb it
// in working space with N(0, perturb_sd^2) noise from a seeded generator.
MultiStartResult minimize_multistart(const ObjectiveFn& f, const Vector& x0, int n_starts,
                                     std::uint64_t seed, double perturb_sd,
                                     const OptimOptions& options = {});

}  // namespace movestat
