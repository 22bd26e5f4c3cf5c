#include "movestat/core/optim.hpp"

#include "movestat/core/rng.hpp"

#include <cmath>
#include <limits>

namespace movestat {

Vector fd_gradient(const ObjectiveFn& f, const Vector& x, double step_rel) {
    const Index n = x.size();
    Vector g(n);
    Vector xp = x;
    for (Index i = 0; i < n; ++i) {
        const double h = step_rel * (1.0 + std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Matrix fd_hessian(const ObjectiveFn& f, const Vector& x, double step_rel) {
    const Index n = x.size();
    Matrix h(n, n);
    Vector steps(n);
    for (Index i = 0; i < n; ++i) steps[i] = step_rel * (1.0 + std::abs(x[i]));
    const double f0 = f(x);
    Vector xp = x;
    for (Index i = 0; i < n; ++i) {
        xp[i] = x[i] + steps[i];
        const double fp = f(xp);
        xp[i] = x[i] - steps[i];
        const double fm = f(xp);
        xp[i] = x[i];
        h(i, i) = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
        for (Index j = i + 1; j < n; ++j) {
            xp[i] = x[i] + steps[i];
            xp[j] = x[j] + steps[j];
            const double fpp = f(xp);
            xp[j] = x[j] - steps[j];
            const double fpm = f(xp);
            xp[i] = x[i] - steps[i];
            const double fmm = f(xp);
            xp[j] = x[j] + steps[j];
            const double fmp = f(xp);
            xp[i] = x[i];
            xp[j] = x[j];
            h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j]);
        }
    }
    return h;
}

OptimResult minimize_bfgs(const ObjectiveFn& f, const Vector& x0, const OptimOptions& opt) {
    OptimResult res;
    res.x = x0;
    const Index n = x0.size();
    int evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        return f(x);
    };

    double fx = eval(res.x);
    if (!std::isfinite(fx)) {
        res.value = fx;
        res.evaluations = evals;
        return res;  // not converged; caller may redraw the start
    }

    Matrix hinv = Matrix::Identity(n, n);
    Vector g = fd_gradient(f, res.x, opt.fd_step);
    evals += 2 * static_cast<int>(n);

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        res.iterations = iter;
        res.grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
        if (!g.allFinite()) break;
        if (res.grad_norm < opt.grad_tol) {
            res.converged = true;
            break;
        }

        Vector dir = -(hinv * g);
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {  // reset on loss of descent direction
            hinv.setIdentity();
            dir = -g;
            slope = g.dot(dir);
        }

        double step = 1.0;
        double fnew = std::numeric_limits<double>::infinity();
        Vector xnew;
        bool ok = false;
        for (int ls = 0; ls < opt.max_line_search; ++ls) {
            xnew = res.x + step * dir;
            fnew = eval(xnew);
            if (std::isfinite(fnew) && fnew <= fx + 1e-4 * step * slope) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            // no acceptable step along this direction
            res.converged = res.grad_norm < 1e2 * opt.grad_tol;
            break;
        }

        Vector gnew = fd_gradient(f, xnew, opt.fd_step);
        evals += 2 * static_cast<int>(n);
        const Vector s = xnew - res.x;
        const Vector y = gnew - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Matrix eye = Matrix::Identity(n, n);
            const Matrix v = eye - rho * s * y.transpose();
            hinv = v * hinv * v.transpose() + rho * s * s.transpose();
        }

        const double fchange = std::abs(fx - fnew) / std::max(1.0, std::abs(fx));
        res.x = xnew;
        fx = fnew;
        g = gnew;
        if (fchange < opt.f_tol) {
            res.grad_norm = g.cwiseAbs().maxCoeff();
            res.converged = true;
            break;
        }
    }

    res.value = fx;
    res.evaluations = evals;
    if (g.allFinite()) res.grad_norm = g.cwiseAbs().maxCoeff();
    return res;
}

MultiStartResult minimize_multistart(const ObjectiveFn& f, const Vector& x0, int n_starts,
                                     std::uint64_t seed, double perturb_sd,
                                     const OptimOptions& options) {
    MultiStartResult out;
    out.n_starts = n_starts;
    std::normal_distribution<double> noise(0.0, perturb_sd);
    for (int s = 0; s < n_starts; ++s) {
        Vector start = x0;
        if (s > 0) {
            Rng rng = substream(seed, 0x5741u, static_cast<std::uint64_t>(s));
            for (Index i = 0; i < start.size(); ++i) start[i] += noise(rng);
        }
        OptimResult r = minimize_bfgs(f, start, options);
        if (r.converged) ++out.n_converged;
        const bool better = std::isfinite(r.value) &&
                            (!std::isfinite(out.best.value) || out.best.x.size() == 0 ||
                             r.value < out.best.value);
        if (s == 0 || better) out.best = r;
    }
    return out;
}

}  // namespace movestat
