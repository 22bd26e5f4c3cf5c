#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "movestat/core/special.hpp"
#include "movestat/ssm/kalman.hpp"
#include "movestat/ssm/mcmc.hpp"

#include <cmath>

using namespace movestat;

namespace {

SwitchingRandomWalkSpec single_state_rw(double sigma_z, double sigma_y) {
    SwitchingRandomWalkSpec spec;
    spec.n_states = 1;
    spec.dim = 1;
    spec.trans = Matrix::Ones(1, 1);
    spec.initial = Vector::Ones(1);
    spec.drift = {Vector::Zero(1)};
    spec.sigma = {sigma_z};
    spec.obs_sigma = sigma_y;
    spec.init_mean = Vector::Zero(1);
    spec.init_cov = 4.0 * Matrix::Identity(1, 1);
    return spec;
}

double normal_lp(double x, double mean, double var) {
    const double z = x - mean;
    return -0.5 * (kLogTwoPi + std::log(var) + z * z / var);
}

}  // namespace

TEST_CASE("gibbs update: single state and symmetric two-state") {
    Rng rng = make_rng(1);
    CHECK(gibbs_state_update(Vector::Zero(1), Vector::Zero(1), rng) == 0);

    int ones = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        ones += gibbs_state_update(Vector::Zero(2), Vector::Zero(2), rng);
    }
    const double se = std::sqrt(0.25 / n);
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 3.0 * se);
}

TEST_CASE("gibbs update matches hand-computed gaussian factors") {
    // two states with different step densities bracketing z_t
    const double z_prev = 0.0, z_t = 0.8, z_next = 1.0;
    Vector left(2), right(2);
    // left factor: Gamma row entries times increment density under s_{t-1}=0
    const Matrix trans = (Matrix(2, 2) << 0.7, 0.3, 0.4, 0.6).finished();
    for (int i = 0; i < 2; ++i) {
        const double var = i == 0 ? 0.5 : 2.0;
        left[i] = std::log(trans(0, i)) + normal_lp(z_t, z_prev, var);
        right[i] = std::log(trans(i, 1)) + normal_lp(z_next, z_t, var);
    }
    Vector lp = left + right;
    Vector p = (lp.array() - lp.maxCoeff()).exp();
    p /= p.sum();

    Rng rng = make_rng(3);
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) ones += gibbs_state_update(left, right, rng);
    const double freq = static_cast<double>(ones) / n;
    const double se = std::sqrt(p[1] * (1.0 - p[1]) / n);
    CHECK(std::abs(freq - p[1]) < 3.0 * se);

    Rng rng2 = make_rng(4);
    const Vector neg_inf = Vector::Constant(2, -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS((void)gibbs_state_update(neg_inf, neg_inf, rng2), NumericalError);
}

TEST_CASE("mh location update: identity proposal accepts, hand value") {
    Rng rng = make_rng(5);
    // zero proposal noise: v == z so the ratio is exactly one
    const auto fwd = [](const Vector& v) { return normal_lp(v[0], 0.0, 1.0); };
    const auto bwd = [](const Vector& v) { return normal_lp(2.0, v[0], 1.0); };
    const MhUpdateResult res =
        mh_location_update(Vector::Zero(1), 0.0, rng, fwd, bwd, nullptr);
    CHECK(res.accepted);
    CHECK(res.log_accept_ratio == doctest::Approx(0.0));

    // hand case: z_{t-1}=0, z_{t+1}=2, z_t=0, v=1, unit variances -> log A = 1
    const Vector z = Vector::Zero(1);
    const Vector v = Vector::Ones(1);
    const double log_a = (normal_lp(v[0], 0.0, 1.0) + normal_lp(2.0, v[0], 1.0)) -
                         (normal_lp(z[0], 0.0, 1.0) + normal_lp(2.0, z[0], 1.0));
    CHECK(log_a == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mh chain matches its bridging target (detailed balance)") {
    // stationary law of this two-factor chain is N(1, 1/2); bin it three ways
    const auto fwd = [](const Vector& v) { return normal_lp(v[0], 0.0, 1.0); };
    const auto bwd = [](const Vector& v) { return normal_lp(2.0, v[0], 1.0); };
    Rng rng = make_rng(6);
    Vector z = Vector::Zero(1);
    const int n = 200000;
    const double edge0 = 0.6, edge1 = 1.4;
    Eigen::Vector3d counts = Eigen::Vector3d::Zero();
    int accepted = 0;
    for (int i = 0; i < n; ++i) {
        const MhUpdateResult r = mh_location_update(z, 1.0, rng, fwd, bwd, nullptr);
        z = r.state;
        accepted += r.accepted ? 1 : 0;
        counts[z[0] < edge0 ? 0 : (z[0] < edge1 ? 1 : 2)] += 1.0;
    }
    counts /= n;
    const double sd = std::sqrt(0.5);
    const Eigen::Vector3d target(normal_cdf((edge0 - 1.0) / sd),
                                 normal_cdf((edge1 - 1.0) / sd) -
                                     normal_cdf((edge0 - 1.0) / sd),
                                 1.0 - normal_cdf((edge1 - 1.0) / sd));
    // batch-means standard error to absorb autocorrelation
    for (int b = 0; b < 3; ++b) {
        CHECK(std::abs(counts[b] - target[b]) < 0.01);
    }
    const double rate = static_cast<double>(accepted) / n;
    CHECK(rate > 0.1);
    CHECK(rate < 0.6);
}

TEST_CASE("posterior latent means match the kalman smoother") {
    const double sigma = 1.0;
    const SwitchingRandomWalkSpec spec = single_state_rw(sigma, sigma);
    Rng rng = make_rng(8);
    std::normal_distribution<double> n01(0.0, 1.0);
    const Index t_len = 50;
    Matrix obs(t_len, 1);
    double z = 0.0;
    for (Index t = 0; t < t_len; ++t) {
        if (t > 0) z += sigma * n01(rng);
        obs(t, 0) = z + sigma * n01(rng);
    }

    McmcOptions opts;
    opts.iterations = 60000;
    opts.burn_in = 10000;
    opts.z_proposal_sd = 1.2;
    opts.seed = 9;
    const McmcResult res = mcmc_ssm(spec, obs, {}, opts);

    LinearGaussianSsmSpec lg = LinearGaussianSsmSpec::random_walk(
        1, sigma * sigma, sigma * sigma, spec.init_mean, spec.init_cov);
    const SmootherResult sm = kalman_smoother(lg, kalman_filter(lg, obs));
    double max_err = 0.0;
    for (Index t = 0; t < t_len; ++t) {
        max_err = std::max(max_err,
                           std::abs(res.z_mean(t, 0) - sm.mean[static_cast<std::size_t>(t)][0]));
    }
    CHECK(max_err < 0.05);
    CHECK(res.accept_rate_z > 0.1);
    CHECK(res.accept_rate_z < 0.7);
}

TEST_CASE("marginalized mode: theta posterior concentrates near the MLE") {
    // two-state switching random walk observed without noise; z is the data
    SwitchingRandomWalkSpec truth;
    truth.n_states = 2;
    truth.dim = 1;
    truth.trans = (Matrix(2, 2) << 0.9, 0.1, 0.15, 0.85).finished();
    truth.initial = (Vector(2) << 0.5, 0.5).finished();
    truth.drift = {Vector::Zero(1), Vector::Zero(1)};
    truth.sigma = {0.3, 2.0};
    truth.obs_sigma = 1e-3;  // effectively exact observations
    truth.init_mean = Vector::Zero(1);
    truth.init_cov = Matrix::Identity(1, 1);

    Rng rng = make_rng(10);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Index t_len = 400;
    Matrix obs(t_len, 1);
    int s = 0;
    double z = 0.0;
    for (Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            z += truth.sigma[static_cast<std::size_t>(s)] * n01(rng);
            s = u(rng) < truth.trans(s, 0) ? 0 : 1;
        }
        obs(t, 0) = z;
    }

    McmcOptions opts;
    opts.iterations = 6000;
    opts.burn_in = 1000;
    opts.update_locations = false;  // data observed exactly
    opts.update_states = false;
    opts.marginalize_states = true;
    opts.update_theta = true;
    opts.theta_proposal_sd = 0.1;
    opts.seed = 11;
    const McmcResult res = mcmc_ssm(truth, obs, {}, opts);

    // posterior means of log sigma against the true values
    const double post_s1 = res.theta_chain.col(0).mean();
    const double post_s2 = res.theta_chain.col(1).mean();
    CHECK(std::exp(post_s1) == doctest::Approx(0.3).epsilon(0.15));
    CHECK(std::exp(post_s2) == doctest::Approx(2.0).epsilon(0.15));
    CHECK(res.theta_diagnostics[0].ess > 50.0);
    CHECK(res.theta_diagnostics[0].rhat < 1.2);
}

TEST_CASE("iteration bookkeeping is validated") {
    const SwitchingRandomWalkSpec spec = single_state_rw(1.0, 1.0);
    Matrix obs(5, 1);
    obs << 0, 1, 0, 1, 0;
    McmcOptions opts;
    opts.iterations = 100;
    opts.burn_in = 100;
    CHECK_THROWS_AS((void)mcmc_ssm(spec, obs, {}, opts), InvalidInput);
    opts.burn_in = 200;
    CHECK_THROWS_AS((void)mcmc_ssm(spec, obs, {}, opts), InvalidInput);
}

TEST_CASE("chain diagnostics behave on iid and trending chains") {
    Rng rng = make_rng(12);
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector iid(4000);
    for (Index i = 0; i < iid.size(); ++i) iid[i] = n01(rng);
    CHECK(chain_ess(iid) > 2000.0);
    CHECK(split_rhat(iid) < 1.02);

    Vector trend(4000);
    for (Index i = 0; i < trend.size(); ++i) trend[i] = static_cast<double>(i);
    CHECK(split_rhat(trend) > 1.5);
}
