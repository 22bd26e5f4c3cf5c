#include "movestat/diffusion/ou.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace movestat {

Matrix matrix_exponential(const Matrix& m) { return m.exp(); }

namespace {

void require_stable(const Matrix& b) {
    Eigen::EigenSolver<Matrix> es(b);
    for (Index i = 0; i < b.rows(); ++i) {
        if (es.eigenvalues()[i].real() >= 0.0) {
            throw InvalidInput("OuParams: attraction matrix must be stable (Re(eig) < 0)");
        }
    }
}

void require_pd(const Matrix& m, const char* what) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw InvalidInput(std::string(what) + ": not PD");
}

Vector sample_gaussian(const GaussianState& g, Rng& rng) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.cov);
    const Vector evals = es.eigenvalues().cwiseMax(0.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    Vector z(g.mean.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = noise(rng);
    return g.mean + es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * z;
}

double gaussian_log_density(const Vector& x, const GaussianState& g) {
    Eigen::LLT<Matrix> llt(g.cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("ou: transition covariance not PD at this time step");
    }
    const Vector w = llt.matrixL().solve(x - g.mean);
    double logdet = 0.0;
    for (Index i = 0; i < g.cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
    return -0.5 * (x.size() * kLogTwoPi + w.squaredNorm()) - logdet;
}

}  // namespace

OuParams OuParams::isotropic(Index d, double b, double equilibrium_var, Vector center) {
    if (!(b < 0.0)) throw InvalidInput("OuParams: isotropic rate b must be negative");
    if (!(equilibrium_var > 0.0)) throw InvalidInput("OuParams: equilibrium variance must be > 0");
    if (center.size() != d) throw InvalidInput("OuParams: center dim mismatch");
    OuParams p;
    p.center = std::move(center);
    p.attraction = b * Matrix::Identity(d, d);
    p.equilibrium_cov = equilibrium_var * Matrix::Identity(d, d);
    return p;
}

OuParams OuParams::general(Vector center, Matrix attraction, Matrix equilibrium_cov) {
    if (attraction.rows() != center.size() || equilibrium_cov.rows() != center.size()) {
        throw InvalidInput("OuParams: dimension mismatch");
    }
    require_stable(attraction);
    require_pd(equilibrium_cov, "OuParams equilibrium covariance");
    OuParams p;
    p.center = std::move(center);
    p.attraction = std::move(attraction);
    p.equilibrium_cov = std::move(equilibrium_cov);
    return p;
}

GaussianState ou_equilibrium(const OuParams& p) { return {p.center, p.equilibrium_cov}; }

GaussianState ou_conditional(const OuParams& p, const Vector& u, double t) {
    if (t < 0.0) throw InvalidInput("ou_conditional: t must be >= 0");
    const Matrix e = matrix_exponential(p.attraction * t);
    GaussianState g;
    g.mean = e * u + (Matrix::Identity(p.dim(), p.dim()) - e) * p.center;
    g.cov = p.equilibrium_cov - e * p.equilibrium_cov * e.transpose();
    return g;
}

Matrix ou_unit_time_variance(const OuParams& p) {
    const Matrix e = matrix_exponential(p.attraction);
    return p.equilibrium_cov - e * p.equilibrium_cov * e.transpose();
}

double ou_log_likelihood(const OuParams& p, const Trajectory& traj, OuFirstObs first) {
    std::vector<Index> obs;
    for (Index i = 0; i < traj.size(); ++i) {
        if (!traj.missing[static_cast<std::size_t>(i)]) obs.push_back(i);
    }
    if (obs.size() < 2) throw InvalidInput("ou_log_likelihood: need at least 2 positions");
    if (p.dim() != 2) throw InvalidInput("ou_log_likelihood: trajectory positions are planar");

    double total = 0.0;
    if (first == OuFirstObs::Equilibrium) {
        total += gaussian_log_density(traj.positions.row(obs[0]).transpose(), ou_equilibrium(p));
    }
    for (std::size_t j = 1; j < obs.size(); ++j) {
        const double dt = traj.times[static_cast<std::size_t>(obs[j])] -
                          traj.times[static_cast<std::size_t>(obs[j - 1])];
        const GaussianState g =
            ou_conditional(p, traj.positions.row(obs[j - 1]).transpose(), dt);
        total += gaussian_log_density(traj.positions.row(obs[j]).transpose(), g);
    }
    return total;
}

Matrix simulate_ou(const OuParams& p, const std::vector<double>& times, const Vector& x0,
                   Rng& rng) {
    if (times.empty()) throw InvalidInput("simulate_ou: empty time grid");
    Matrix out(static_cast<Index>(times.size()), p.dim());
    Vector cur = x0;
    out.row(0) = cur.transpose();
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        if (!(dt > 0.0)) throw InvalidInput("simulate_ou: times must be increasing");
        cur = sample_gaussian(ou_conditional(p, cur, dt), rng);
        out.row(static_cast<Index>(i)) = cur.transpose();
    }
    return out;
}

GaussianState ou_bridge_marginal(const OuParams& p, const Vector& a, const Vector& b, double t1,
                                 double t2, double t) {
    if (!(t2 > t1) || t < t1 || t > t2) throw InvalidInput("ou_bridge_marginal: bad times");
    // combine forward N(m1, C1) with the backward observation b = e2 x + c2 + N(0, C2)
    const GaussianState fwd = ou_conditional(p, a, t - t1);
    const Matrix e2 = matrix_exponential(p.attraction * (t2 - t));
    const Matrix c2 = p.equilibrium_cov - e2 * p.equilibrium_cov * e2.transpose();
    const Vector offset = (Matrix::Identity(p.dim(), p.dim()) - e2) * p.center;
    if (t <= t1 + 1e-14) return {a, Matrix::Zero(p.dim(), p.dim())};
    if (t >= t2 - 1e-14) return {b, Matrix::Zero(p.dim(), p.dim())};
    const Matrix prior_prec = fwd.cov.llt().solve(Matrix::Identity(p.dim(), p.dim()));
    const Matrix obs_prec =
        e2.transpose() * c2.llt().solve(Matrix::Identity(p.dim(), p.dim())) * e2;
    const Matrix post_cov =
        (prior_prec + obs_prec).llt().solve(Matrix::Identity(p.dim(), p.dim()));
    const Vector rhs = prior_prec * fwd.mean +
                       e2.transpose() * c2.llt().solve(b - offset);
    return {post_cov * rhs, post_cov};
}

void IntegratedOuParams::validate() const {
    if (!(b < 0.0)) throw InvalidInput("IntegratedOuParams: b must be negative");
    if (!(equilibrium_var > 0.0)) throw InvalidInput("IntegratedOuParams: variance must be > 0");
    if (mean_velocity.size() != dim) {
        throw InvalidInput("IntegratedOuParams: mean velocity dim mismatch");
    }
}

IntegratedOuMoments integrated_ou_moments(const IntegratedOuParams& p, double dt) {
    p.validate();
    if (!(dt > 0.0)) throw InvalidInput("integrated_ou_moments: dt must be positive");
    const double beta = -p.b;
    const double sigma2 = 2.0 * beta * p.equilibrium_var;  // driving noise intensity
    const double eb = std::exp(-beta * dt);
    IntegratedOuMoments m;
    m.decay = eb;
    m.mean_pos_coef_v = (1.0 - eb) / beta;
    m.var_vel = p.equilibrium_var * (1.0 - eb * eb);
    m.var_pos = sigma2 / (beta * beta) *
                (dt - 2.0 * (1.0 - eb) / beta + (1.0 - eb * eb) / (2.0 * beta));
    m.cov_pos_vel = sigma2 / (2.0 * beta * beta) * (1.0 - eb) * (1.0 - eb);
    return m;
}

IouPath simulate_integrated_ou(const IntegratedOuParams& p, const Vector& x0, const Vector& v0,
                               const std::vector<double>& times, Rng& rng) {
    p.validate();
    if (times.empty()) throw InvalidInput("simulate_integrated_ou: empty time grid");
    if (x0.size() != p.dim || v0.size() != p.dim) {
        throw InvalidInput("simulate_integrated_ou: state dim mismatch");
    }
    IouPath path;
    path.positions.resize(static_cast<Index>(times.size()), p.dim);
    path.velocities.resize(static_cast<Index>(times.size()), p.dim);
    Vector x = x0, v = v0;
    path.positions.row(0) = x.transpose();
    path.velocities.row(0) = v.transpose();
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        if (!(dt > 0.0)) throw InvalidInput("simulate_integrated_ou: times must be increasing");
        const IntegratedOuMoments m = integrated_ou_moments(p, dt);
        // exact joint draw per coordinate: position increment then velocity
        // conditioned on it
        for (Index k = 0; k < p.dim; ++k) {
            const double mu_v = p.mean_velocity[k];
            const double vdev = v[k] - mu_v;
            const double mean_dx = mu_v * dt + vdev * m.mean_pos_coef_v;
            const double mean_v = mu_v + vdev * m.decay;
            const double dx = mean_dx + std::sqrt(std::max(m.var_pos, 0.0)) * noise(rng);
            const double cond_mean_v =
                mean_v + (m.var_pos > 0.0 ? m.cov_pos_vel / m.var_pos * (dx - mean_dx) : 0.0);
            const double cond_var_v =
                std::max(m.var_vel - (m.var_pos > 0.0 ? m.cov_pos_vel * m.cov_pos_vel / m.var_pos
                                                      : 0.0),
                         0.0);
            x[k] += dx;
            v[k] = cond_mean_v + std::sqrt(cond_var_v) * noise(rng);
        }
        path.positions.row(static_cast<Index>(i)) = x.transpose();
        path.velocities.row(static_cast<Index>(i)) = v.transpose();
    }
    return path;
}

}  // namespace movestat
