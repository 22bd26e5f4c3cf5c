#include "movestat/ssm/kalman.hpp"

#include <cmath>

namespace movestat {

namespace {

void require_psd(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) throw InvalidInput(std::string(what) + ": not square");
    if (!m.isApprox(m.transpose(), 1e-10)) {
        throw InvalidInput(std::string(what) + ": not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        throw InvalidInput(std::string(what) + ": not positive semi-definite");
    }
}

double gaussian_log_density(const Vector& r, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("kalman: singular innovation cov");
    const Vector w = llt.matrixL().solve(r);
    double logdet = 0.0;
    for (Index i = 0; i < cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
    return -0.5 * (r.size() * kLogTwoPi + w.squaredNorm()) - logdet;
}

}  // namespace

void LinearGaussianSsmSpec::validate() const {
    const Index d = state_dim();
    if (transition.cols() != d || offset.size() != d || process_cov.rows() != d ||
        init_mean.size() != d || init_cov.rows() != d || obs_matrix.cols() != d ||
        obs_cov.rows() != obs_matrix.rows()) {
        throw InvalidInput("LinearGaussianSsmSpec: dimension mismatch");
    }
    require_psd(process_cov, "process covariance");
    require_psd(obs_cov, "observation covariance");
    require_psd(init_cov, "initial covariance");
}

LinearGaussianSsmSpec LinearGaussianSsmSpec::random_walk(Index d, double process_var,
                                                         double obs_var, Vector init_mean,
                                                         Matrix init_cov) {
    LinearGaussianSsmSpec spec;
    spec.transition = Matrix::Identity(d, d);
    spec.offset = Vector::Zero(d);
    spec.process_cov = process_var * Matrix::Identity(d, d);
    spec.obs_matrix = Matrix::Identity(d, d);
    spec.obs_cov = obs_var * Matrix::Identity(d, d);
    spec.init_mean = std::move(init_mean);
    spec.init_cov = std::move(init_cov);
    return spec;
}

KalmanResult kalman_filter(const LinearGaussianSsmSpec& spec, const Matrix& obs,
                           const std::vector<bool>& missing) {
    spec.validate();
    const Index t_len = obs.rows();
    if (t_len == 0) throw InvalidInput("kalman_filter: no observations");
    if (obs.cols() != spec.obs_dim()) throw InvalidInput("kalman_filter: obs dim mismatch");
    if (!missing.empty() && missing.size() != static_cast<std::size_t>(t_len)) {
        throw InvalidInput("kalman_filter: missing mask length mismatch");
    }
    const Index d = spec.state_dim();
    const Matrix& a = spec.transition;
    const Matrix& h = spec.obs_matrix;

    KalmanResult res;
    res.loglik_increments = Vector::Zero(t_len);
    Vector m = spec.init_mean;
    Matrix p = spec.init_cov;
    for (Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            m = a * m + spec.offset;
            p = a * p * a.transpose() + spec.process_cov;
        }
        res.predicted_mean.push_back(m);
        res.predicted_cov.push_back(p);

        const bool is_missing = !missing.empty() && missing[static_cast<std::size_t>(t)];
        if (!is_missing) {
            const Vector y = obs.row(t).transpose();
            const Vector r = y - h * m;
            const Matrix s = h * p * h.transpose() + spec.obs_cov;
            res.loglik_increments[t] = gaussian_log_density(r, s);
            const Matrix k = s.ldlt().solve(h * p).transpose();  // p h' s^{-1}
            m = m + k * r;
            const Matrix ikh = Matrix::Identity(d, d) - k * h;
            p = ikh * p * ikh.transpose() + k * spec.obs_cov * k.transpose();
        }
        res.filtered_mean.push_back(m);
        res.filtered_cov.push_back(p);
    }
    res.log_likelihood = res.loglik_increments.sum();
    return res;
}

SmootherResult kalman_smoother(const LinearGaussianSsmSpec& spec, const KalmanResult& filter) {
    const auto t_len = static_cast<Index>(filter.filtered_mean.size());
    if (t_len == 0) throw InvalidInput("kalman_smoother: empty filter result");
    SmootherResult out;
    out.mean.resize(static_cast<std::size_t>(t_len));
    out.cov.resize(static_cast<std::size_t>(t_len));
    out.mean.back() = filter.filtered_mean.back();
    out.cov.back() = filter.filtered_cov.back();
    for (Index t = t_len - 2; t >= 0; --t) {
        const auto tu = static_cast<std::size_t>(t);
        const Matrix& pf = filter.filtered_cov[tu];
        const Matrix& pp = filter.predicted_cov[tu + 1];
        // gain C = P_f A' P_pred^{-1}, via a solve against the symmetric P_pred
        const Matrix c = pp.ldlt().solve(spec.transition * pf).transpose();
        out.mean[tu] = filter.filtered_mean[tu] +
                       c * (out.mean[tu + 1] - filter.predicted_mean[tu + 1]);
        out.cov[tu] = pf + c * (out.cov[tu + 1] - pp) * c.transpose();
    }
    return out;
}

}  // namespace movestat
