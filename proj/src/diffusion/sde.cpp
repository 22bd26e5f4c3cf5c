#include "movestat/diffusion/sde.hpp"

#include <cmath>

namespace movestat {

void SdeSpec::validate() const {
    if (dim < 1) throw InvalidInput("SdeSpec: dim must be >= 1");
    if (!drift || !diffusion) throw InvalidInput("SdeSpec: drift and diffusion are required");
}

SdeSpec SdeSpec::from_potential_gradient(Index dim,
                                         std::function<Vector(const Vector&)> potential_grad,
                                         Matrix diffusion_coef) {
    SdeSpec spec;
    spec.dim = dim;
    spec.drift = [grad = std::move(potential_grad)](double, const Vector& x) {
        return Vector(-grad(x));
    };
    spec.diffusion = [b = std::move(diffusion_coef)](double, const Vector&) { return b; };
    spec.validate();
    return spec;
}

Matrix euler_simulate(const SdeSpec& spec, const Vector& x0, const std::vector<double>& times,
                      Rng& rng) {
    spec.validate();
    if (times.empty()) throw InvalidInput("euler_simulate: empty time grid");
    if (x0.size() != spec.dim) throw InvalidInput("euler_simulate: x0 dim mismatch");
    Matrix out(static_cast<Index>(times.size()), spec.dim);
    Vector x = x0;
    out.row(0) = x.transpose();
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        if (!(dt > 0.0)) throw InvalidInput("euler_simulate: grid must be ascending");
        const double t = times[i - 1];
        const Vector a = spec.drift(t, x);
        const Matrix b = spec.diffusion(t, x);
        Vector z(b.cols());
        for (Index k = 0; k < z.size(); ++k) z[k] = noise(rng);
        x += a * dt + std::sqrt(dt) * (b * z);
        out.row(static_cast<Index>(i)) = x.transpose();
    }
    return out;
}

double euler_log_likelihood(const SdeSpec& spec, const Trajectory& traj) {
    spec.validate();
    if (spec.dim != 2) throw InvalidInput("euler_log_likelihood: trajectory positions are planar");
    std::vector<Index> obs;
    for (Index i = 0; i < traj.size(); ++i) {
        if (!traj.missing[static_cast<std::size_t>(i)]) obs.push_back(i);
    }
    if (obs.size() < 2) throw InvalidInput("euler_log_likelihood: need at least 2 positions");

    double total = 0.0;
    for (std::size_t j = 1; j < obs.size(); ++j) {
        const double t = traj.times[static_cast<std::size_t>(obs[j - 1])];
        const double dt = traj.times[static_cast<std::size_t>(obs[j])] - t;
        if (!(dt > 0.0)) throw InvalidInput("euler_log_likelihood: nonpositive time increment");
        const Vector x = traj.positions.row(obs[j - 1]).transpose();
        const Vector mean = x + spec.drift(t, x) * dt;
        const Matrix b = spec.diffusion(t, x);
        const Matrix cov = b * b.transpose() * dt;
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("euler_log_likelihood: singular step covariance");
        }
        const Vector w = llt.matrixL().solve(traj.positions.row(obs[j]).transpose() - mean);
        double logdet = 0.0;
        for (Index i = 0; i < cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
        total += -0.5 * (spec.dim * kLogTwoPi + w.squaredNorm()) - logdet;
    }
    return total;
}

}  // namespace movestat
