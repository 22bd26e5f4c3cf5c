#include "movestat/ssm/laplace.hpp"

#include <algorithm>
#include <cmath>

namespace movestat {

namespace {

struct ObsDerivs {
    double value, grad, hess;  // of log f(y - z) with respect to z
};

ObsDerivs obs_derivs(const ObsErrorModel& m, double r) {
    ObsDerivs d;
    const double s2 = m.scale * m.scale;
    if (m.kind == ObsErrorModel::Kind::Gaussian) {
        d.value = -0.5 * (kLogTwoPi + std::log(s2)) - 0.5 * r * r / s2;
        d.grad = r / s2;
        d.hess = -1.0 / s2;
        return d;
    }
    const double nu = m.df;
    const double denom = nu * s2 + r * r;
    d.value = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
              0.5 * std::log(nu * kPi) - std::log(m.scale) -
              0.5 * (nu + 1.0) * std::log1p(r * r / (nu * s2));
    d.grad = (nu + 1.0) * r / denom;
    d.hess = (nu + 1.0) * (r * r - nu * s2) / (denom * denom);
    return d;
}

struct JointEval {
    double value = 0.0;
    Matrix grad;                 // T x d
    std::vector<Matrix> diag;    // negated Hessian diagonal blocks
};

// Block-tridiagonal solve of (M + lambda I) x = g where the off-diagonal
// blocks are the constant coupling B. Returns false if a pivot block is not
// positive definite. On success optionally accumulates log det.
bool block_tridiag_solve(const std::vector<Matrix>& diag, const Matrix& coupling,
                         const Matrix& grad, double lambda, Matrix* solution,
                         double* logdet) {
    const auto t_len = static_cast<Index>(diag.size());
    const Index d = coupling.rows();
    std::vector<Matrix> s_inv_b(static_cast<std::size_t>(t_len));
    std::vector<Eigen::LLT<Matrix>> llts(static_cast<std::size_t>(t_len));
    Matrix r = grad;
    double ld = 0.0;
    for (Index t = 0; t < t_len; ++t) {
        const auto tu = static_cast<std::size_t>(t);
        Matrix s = diag[tu] + lambda * Matrix::Identity(d, d);
        if (t > 0) s -= coupling.transpose() * s_inv_b[tu - 1];
        llts[tu].compute(s);
        if (llts[tu].info() != Eigen::Success) return false;
        for (Index i = 0; i < d; ++i) {
            const double piv = llts[tu].matrixL()(i, i);
            if (!(piv > 0.0) || !std::isfinite(piv)) return false;
            ld += 2.0 * std::log(piv);
        }
        if (t + 1 < t_len) s_inv_b[tu] = llts[tu].solve(coupling);
        if (t > 0) {
            r.row(t) -= (coupling.transpose() * llts[tu - 1].solve(r.row(t - 1).transpose()))
                            .transpose();
        }
    }
    if (logdet) *logdet = ld;
    if (solution) {
        Matrix x(t_len, d);
        x.row(t_len - 1) = llts[static_cast<std::size_t>(t_len - 1)]
                               .solve(r.row(t_len - 1).transpose())
                               .transpose();
        for (Index t = t_len - 2; t >= 0; --t) {
            const Vector rhs = r.row(t).transpose() - coupling * x.row(t + 1).transpose();
            x.row(t) = llts[static_cast<std::size_t>(t)].solve(rhs).transpose();
        }
        *solution = x;
    }
    return true;
}

}  // namespace

void ObsErrorModel::validate() const {
    if (!(scale > 0.0)) throw InvalidInput("ObsErrorModel: scale must be positive");
    if (kind == Kind::StudentT && !(df > 0.0)) {
        throw InvalidInput("ObsErrorModel: df must be positive");
    }
}

void HeavyTailSsmSpec::validate() const {
    core.validate();
    obs_error.validate();
    if (!core.obs_matrix.isIdentity(1e-12)) {
        throw InvalidInput("HeavyTailSsmSpec: observation matrix must be identity");
    }
}

LaplaceResult laplace_marginal(const HeavyTailSsmSpec& spec, const Matrix& obs,
                               const std::vector<bool>& missing, const Matrix* warm_start) {
    spec.validate();
    const Index t_len = obs.rows();
    if (t_len == 0) throw InvalidInput("laplace_marginal: no observations");
    const Index d = spec.core.state_dim();
    if (obs.cols() != d) throw InvalidInput("laplace_marginal: obs dim mismatch");
    if (!missing.empty() && missing.size() != static_cast<std::size_t>(t_len)) {
        throw InvalidInput("laplace_marginal: missing mask length mismatch");
    }
    auto is_missing = [&](Index t) {
        return !missing.empty() && missing[static_cast<std::size_t>(t)];
    };

    const Matrix& a = spec.core.transition;
    const Eigen::LLT<Matrix> q_llt(spec.core.process_cov);
    const Eigen::LLT<Matrix> p0_llt(spec.core.init_cov);
    if (q_llt.info() != Eigen::Success || p0_llt.info() != Eigen::Success) {
        throw InvalidInput("laplace_marginal: process/init covariance must be PD");
    }
    const Matrix q_inv = q_llt.solve(Matrix::Identity(d, d));
    const Matrix p0_inv = p0_llt.solve(Matrix::Identity(d, d));
    double q_logdet = 0.0, p0_logdet = 0.0;
    for (Index i = 0; i < d; ++i) {
        q_logdet += 2.0 * std::log(q_llt.matrixL()(i, i));
        p0_logdet += 2.0 * std::log(p0_llt.matrixL()(i, i));
    }
    const Matrix coupling = -a.transpose() * q_inv;  // block (t, t+1) of -Hessian... sign below
    const Matrix ataq = a.transpose() * q_inv * a;

    // initialize latent states: observations where present, interpolated otherwise
    Matrix z(t_len, d);
    if (warm_start && warm_start->rows() == t_len && warm_start->cols() == d) {
        z = *warm_start;
    } else {
        Index prev = -1;
        for (Index t = 0; t < t_len; ++t) {
            if (!is_missing(t)) {
                z.row(t) = obs.row(t);
                if (prev < 0) {
                    for (Index s = 0; s < t; ++s) z.row(s) = obs.row(t);
                } else {
                    for (Index s = prev + 1; s < t; ++s) {
                        const double w = static_cast<double>(s - prev) /
                                         static_cast<double>(t - prev);
                        z.row(s) = (1.0 - w) * obs.row(prev) + w * obs.row(t);
                    }
                }
                prev = t;
            }
        }
        if (prev < 0) {
            z.rowwise() = spec.core.init_mean.transpose();
        } else {
            for (Index s = prev + 1; s < t_len; ++s) z.row(s) = obs.row(prev);
        }
    }

    auto evaluate = [&](const Matrix& zz, bool with_derivs) {
        JointEval ev;
        if (with_derivs) {
            ev.grad = Matrix::Zero(t_len, d);
            ev.diag.assign(static_cast<std::size_t>(t_len), Matrix::Zero(d, d));
        }
        // prior on the first state
        {
            const Vector e0 = zz.row(0).transpose() - spec.core.init_mean;
            ev.value += -0.5 * (d * kLogTwoPi + p0_logdet + e0.dot(p0_inv * e0));
            if (with_derivs) {
                ev.grad.row(0) -= (p0_inv * e0).transpose();
                ev.diag[0] += p0_inv;
            }
        }
        for (Index t = 1; t < t_len; ++t) {
            const Vector e = zz.row(t).transpose() - a * zz.row(t - 1).transpose() -
                             spec.core.offset;
            ev.value += -0.5 * (d * kLogTwoPi + q_logdet + e.dot(q_inv * e));
            if (with_derivs) {
                const Vector qe = q_inv * e;
                ev.grad.row(t) -= qe.transpose();
                ev.grad.row(t - 1) += (a.transpose() * qe).transpose();
                ev.diag[static_cast<std::size_t>(t)] += q_inv;
                ev.diag[static_cast<std::size_t>(t - 1)] += ataq;
            }
        }
        for (Index t = 0; t < t_len; ++t) {
            if (is_missing(t)) continue;
            for (Index k = 0; k < d; ++k) {
                const ObsDerivs od = obs_derivs(spec.obs_error, obs(t, k) - zz(t, k));
                ev.value += od.value;
                if (with_derivs) {
                    ev.grad(t, k) += od.grad;
                    ev.diag[static_cast<std::size_t>(t)](k, k) -= od.hess;
                }
            }
        }
        return ev;
    };

    LaplaceResult res;
    res.latent_mode = z;
    double lambda = 0.0;
    JointEval ev = evaluate(z, true);
    res.objective_trace.push_back(ev.value);
    const int max_newton = 200;
    // primary tolerance 1e-8 on the gradient max-norm; once value changes
    // fall below double precision the scaled stall tolerance takes over
    const auto stall_tol = [&]() { return 1e-8 * (1.0 + std::abs(ev.value)); };
    for (int iter = 0; iter < max_newton; ++iter) {
        res.newton_iterations = iter;
        res.grad_max_norm = ev.grad.cwiseAbs().maxCoeff();
        if (res.grad_max_norm < 1e-8) {
            res.converged = true;
            break;
        }
        Matrix step;
        bool ok = false;
        for (int tries = 0; tries < 60 && !ok; ++tries) {
            ok = block_tridiag_solve(ev.diag, coupling, ev.grad, lambda, &step, nullptr);
            if (!ok) lambda = std::max(lambda * 10.0, 1e-8);
        }
        if (!ok) throw NumericalError("laplace_marginal: inner Hessian never became PD");

        double stepsize = 1.0;
        bool improved = false;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Matrix z_new = z + stepsize * step;
            const JointEval trial = evaluate(z_new, false);
            if (std::isfinite(trial.value) && trial.value >= ev.value - 1e-14) {
                z = z_new;
                improved = trial.value > ev.value;
                ev = evaluate(z, true);
                res.objective_trace.push_back(ev.value);
                accepted = true;
                break;
            }
            stepsize *= 0.5;
        }
        if (!accepted) {
            if (res.grad_max_norm < stall_tol()) {
                res.converged = true;
                break;
            }
            lambda = std::max(lambda * 10.0, 1e-8);  // Levenberg fallback
            continue;
        }
        if (stepsize >= 1.0 - 1e-12) lambda *= 0.1;
        if (lambda < 1e-12) lambda = 0.0;
        if (!improved && res.grad_max_norm < stall_tol()) {
            res.converged = true;  // value changes below double precision
            break;
        }
    }
    if (!res.converged && res.grad_max_norm < 1e-8) res.converged = true;
    if (!res.converged) {
        throw NumericalError("laplace_marginal: inner Newton did not converge; |grad| = " +
                             std::to_string(res.grad_max_norm));
    }

    double logdet = 0.0;
    if (!block_tridiag_solve(ev.diag, coupling, ev.grad, 0.0, nullptr, &logdet)) {
        if (!block_tridiag_solve(ev.diag, coupling, ev.grad, 1e-10, nullptr, &logdet)) {
            throw NumericalError("laplace_marginal: negated Hessian not PD at the mode");
        }
    }
    res.latent_mode = z;
    const double n_latent = static_cast<double>(t_len) * static_cast<double>(d);
    res.log_marginal = ev.value + 0.5 * n_latent * kLogTwoPi - 0.5 * logdet;
    return res;
}

LaplaceFit fit_laplace(const HeavyTailSsmSpec& spec_template, const Matrix& obs,
                       const std::vector<bool>& missing, const Vector& init_theta,
                       const OptimOptions& options) {
    if (obs.rows() == 0) throw InvalidInput("fit_laplace: no observations");
    const bool student = spec_template.obs_error.kind == ObsErrorModel::Kind::StudentT;
    const bool fit_df = student && init_theta.size() == 3;
    if (init_theta.size() != (fit_df ? 3 : 2)) {
        throw InvalidInput("fit_laplace: init theta must be (log sz, log sy[, log nu])");
    }
    const Index d = spec_template.core.state_dim();

    auto build = [&](const Vector& theta) {
        HeavyTailSsmSpec s = spec_template;
        const double sz = std::clamp(std::exp(theta[0]), 1e-150, 1e150);
        s.core.process_cov = sz * sz * Matrix::Identity(d, d);
        s.obs_error.scale = std::clamp(std::exp(theta[1]), 1e-150, 1e150);
        if (fit_df) s.obs_error.df = std::min(std::exp(theta[2]), 1e6);
        return s;
    };

    Matrix warm;
    auto objective = [&](const Vector& theta) {
        try {
            const LaplaceResult r = laplace_marginal(build(theta), obs, missing,
                                                     warm.size() ? &warm : nullptr);
            warm = r.latent_mode;
            return -r.log_marginal;
        } catch (const std::exception&) {
            return 1e12;
        }
    };

    const OptimResult opt = minimize_bfgs(objective, init_theta, options);
    LaplaceFit fit;
    fit.theta = opt.x;
    fit.opt = opt;
    fit.converged = opt.converged;
    fit.sigma_z = std::exp(opt.x[0]);
    fit.sigma_y = std::exp(opt.x[1]);
    fit.nu = fit_df ? std::exp(opt.x[2]) : spec_template.obs_error.df;
    fit.log_marginal = -opt.value;
    const Matrix hess = fd_hessian(objective, opt.x, 1e-4);
    const Matrix cov = hess.fullPivLu().inverse();
    fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return fit;
}

}  // namespace movestat
