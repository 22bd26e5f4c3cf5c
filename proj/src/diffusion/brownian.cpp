#include "movestat/diffusion/brownian.hpp"

#include <cmath>

namespace movestat {

void BrownianSpec::validate() const {
    if (cov.rows() != cov.cols()) throw InvalidInput("BrownianSpec: covariance not square");
    if (!cov.isApprox(cov.transpose(), 1e-10)) {
        throw InvalidInput("BrownianSpec: covariance not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        throw InvalidInput("BrownianSpec: covariance not PSD");
    }
}

BrownianSpec BrownianSpec::isotropic(Index d, double sigma2) {
    if (!(sigma2 >= 0.0)) throw InvalidInput("BrownianSpec: sigma2 must be nonnegative");
    return BrownianSpec{sigma2 * Matrix::Identity(d, d)};
}

double bm_log_likelihood(const BrownianSpec& spec, const Trajectory& traj) {
    spec.validate();
    std::vector<Index> obs;
    for (Index i = 0; i < traj.size(); ++i) {
        if (!traj.missing[static_cast<std::size_t>(i)]) obs.push_back(i);
    }
    if (obs.size() < 2) throw InvalidInput("bm_log_likelihood: need at least 2 positions");
    const Index d = spec.dim();
    if (d != 2) throw InvalidInput("bm_log_likelihood: trajectory positions are planar");

    const Eigen::LLT<Matrix> llt(spec.cov);
    if (llt.info() != Eigen::Success) {
        throw InvalidInput("bm_log_likelihood: covariance must be PD for the density");
    }
    double base_logdet = 0.0;
    for (Index i = 0; i < d; ++i) base_logdet += 2.0 * std::log(llt.matrixL()(i, i));

    double total = 0.0;
    for (std::size_t j = 1; j < obs.size(); ++j) {
        const double dt = traj.times[static_cast<std::size_t>(obs[j])] -
                          traj.times[static_cast<std::size_t>(obs[j - 1])];
        if (!(dt > 0.0)) throw InvalidInput("bm_log_likelihood: nonpositive time increment");
        const Vector dx = (traj.positions.row(obs[j]) - traj.positions.row(obs[j - 1]))
                              .transpose();
        const Vector w = llt.matrixL().solve(dx);
        total += -0.5 * (d * (kLogTwoPi + std::log(dt)) + base_logdet + w.squaredNorm() / dt);
    }
    return total;
}

BridgeMoments brownian_bridge_marginal(const Vector& a, const Vector& b, double t1, double t2,
                                       double sigma2, double t) {
    if (!(t2 > t1)) throw InvalidInput("brownian_bridge_marginal: need t2 > t1");
    if (t < t1 || t > t2) throw InvalidInput("brownian_bridge_marginal: t outside [t1, t2]");
    if (a.size() != b.size()) throw InvalidInput("brownian_bridge_marginal: endpoint dims differ");
    BridgeMoments m;
    const double w = (t - t1) / (t2 - t1);
    m.mean = a + w * (b - a);
    m.variance = sigma2 * (t2 - t) * (t - t1) / (t2 - t1);
    return m;
}

Matrix sample_bridge_path(const Vector& a, const Vector& b, double t1, double t2, double sigma2,
                          const std::vector<double>& times, Rng& rng) {
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) {
            throw InvalidInput("sample_bridge_path: query times must be ascending");
        }
    }
    Matrix out(static_cast<Index>(times.size()), a.size());
    std::normal_distribution<double> noise(0.0, 1.0);
    Vector cur = a;
    double cur_t = t1;
    for (std::size_t i = 0; i < times.size(); ++i) {
        // bridge from the last sampled point to the fixed right endpoint
        const BridgeMoments m = brownian_bridge_marginal(cur, b, cur_t, t2, sigma2, times[i]);
        const double sd = std::sqrt(std::max(m.variance, 0.0));
        for (Index k = 0; k < cur.size(); ++k) cur[k] = m.mean[k] + sd * noise(rng);
        cur_t = times[i];
        out.row(static_cast<Index>(i)) = cur.transpose();
    }
    return out;
}

}  // namespace movestat
