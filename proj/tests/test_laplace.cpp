#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "movestat/core/rng.hpp"
#include "movestat/core/special.hpp"
#include "movestat/ssm/laplace.hpp"

#include <cmath>

using namespace movestat;

namespace {

HeavyTailSsmSpec make_spec(Index d, double sigma_z, double sigma_y, double nu,
                           ObsErrorModel::Kind kind = ObsErrorModel::Kind::StudentT) {
    HeavyTailSsmSpec spec;
    spec.core = LinearGaussianSsmSpec::random_walk(d, sigma_z * sigma_z, sigma_y * sigma_y,
                                                   Vector::Zero(d),
                                                   25.0 * Matrix::Identity(d, d));
    spec.obs_error.kind = kind;
    spec.obs_error.scale = sigma_y;
    spec.obs_error.df = nu;
    return spec;
}

struct SimResult {
    Matrix obs;
    std::vector<bool> missing;
};

SimResult simulate_heavy(const HeavyTailSsmSpec& spec, Index t_len, double missing_frac,
                         Rng& rng) {
    const Index d = spec.core.state_dim();
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double sz = std::sqrt(spec.core.process_cov(0, 0));
    SimResult sim;
    sim.obs.resize(t_len, d);
    sim.missing.assign(static_cast<std::size_t>(t_len), false);
    Vector z = spec.core.init_mean;
    for (Index i = 0; i < d; ++i) {
        z[i] += std::sqrt(spec.core.init_cov(0, 0)) * n01(rng) * 0.0;  // start at the prior mean
    }
    std::student_t_distribution<double> tdist(spec.obs_error.df);
    for (Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            for (Index i = 0; i < d; ++i) z[i] += sz * n01(rng);
        }
        for (Index i = 0; i < d; ++i) {
            const double err = spec.obs_error.kind == ObsErrorModel::Kind::Gaussian
                                   ? spec.obs_error.scale * n01(rng)
                                   : spec.obs_error.scale * tdist(rng);
            sim.obs(t, i) = z[i] + err;
        }
        if (missing_frac > 0.0 && u(rng) < missing_frac && t > 0) {
            sim.missing[static_cast<std::size_t>(t)] = true;
        }
    }
    return sim;
}

}  // namespace

TEST_CASE("gaussian branch reproduces the kalman likelihood exactly") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng = make_rng(seed);
        const HeavyTailSsmSpec spec = make_spec(2, 0.8, 1.3, 5.0, ObsErrorModel::Kind::Gaussian);
        const SimResult sim = simulate_heavy(spec, 60, 0.2, rng);
        const LaplaceResult lap = laplace_marginal(spec, sim.obs, sim.missing);
        const KalmanResult kf = kalman_filter(spec.core, sim.obs, sim.missing);
        CHECK(lap.log_marginal == doctest::Approx(kf.log_likelihood).epsilon(1e-6));
        CHECK(lap.converged);
        // smoothed means coincide with the joint mode for a Gaussian model
        const SmootherResult sm = kalman_smoother(spec.core, kf);
        for (Index t = 0; t < 60; ++t) {
            CHECK((lap.latent_mode.row(t).transpose() - sm.mean[static_cast<std::size_t>(t)])
                      .cwiseAbs()
                      .maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("T=3 heavy-tail marginal matches 3-d quadrature") {
    const HeavyTailSsmSpec spec = make_spec(1, 1.0, 1.0, 4.0);
    Matrix obs(3, 1);
    obs << 0.4, -0.6, 1.2;

    // nested composite quadrature over (z1, z2, z3)
    auto obs_dens = [&](double r) {
        const double nu = 4.0;
        return std::exp(std::lgamma(2.5) - std::lgamma(2.0) - 0.5 * std::log(nu * kPi) -
                        2.5 * std::log1p(r * r / nu));
    };
    auto proc_dens = [&](double from, double to) {
        const double r = to - from;
        return std::exp(-0.5 * (kLogTwoPi + r * r));
    };
    auto prior_dens = [&](double z) {
        const double v = 25.0;
        return std::exp(-0.5 * (kLogTwoPi + std::log(v) + z * z / v));
    };
    const double lo = -14.0, hi = 14.0;
    auto inner = [&](double z2) {
        return integrate([&](double z3) { return proc_dens(z2, z3) * obs_dens(obs(2, 0) - z3); },
                         lo, hi, 1e-11);
    };
    auto middle = [&](double z1) {
        return integrate(
            [&](double z2) { return proc_dens(z1, z2) * obs_dens(obs(1, 0) - z2) * inner(z2); },
            lo, hi, 1e-11);
    };
    const double marginal = integrate(
        [&](double z1) { return prior_dens(z1) * obs_dens(obs(0, 0) - z1) * middle(z1); }, lo,
        hi, 1e-11);
    const double oracle = std::log(marginal);

    const LaplaceResult lap = laplace_marginal(spec, obs);
    CHECK(lap.converged);
    CHECK(std::abs(lap.log_marginal - oracle) < 1e-4);
}

TEST_CASE("long heavy-tail series: finite value, few Newton steps") {
    Rng rng = make_rng(7);
    const HeavyTailSsmSpec spec = make_spec(2, 1.0, 1.0, 5.0);
    const SimResult sim = simulate_heavy(spec, 2000, 0.4, rng);
    const LaplaceResult lap = laplace_marginal(spec, sim.obs, sim.missing);
    CHECK(std::isfinite(lap.log_marginal));
    CHECK(lap.converged);
    CHECK(lap.newton_iterations <= 50);
}

TEST_CASE("fit with df fixed large matches the kalman MLE on gaussian data") {
    Rng rng = make_rng(11);
    const HeavyTailSsmSpec truth = make_spec(1, 1.0, 0.7, 5.0, ObsErrorModel::Kind::Gaussian);
    const SimResult sim = simulate_heavy(truth, 800, 0.0, rng);

    // template with a huge fixed df behaves like a Gaussian error model
    HeavyTailSsmSpec tmpl = make_spec(1, 0.5, 0.5, 5e4);
    Vector init(2);
    init << std::log(0.5), std::log(0.5);
    const LaplaceFit fit = fit_laplace(tmpl, sim.obs, {}, init);
    CHECK(fit.converged);

    // reference: maximize the exact Kalman likelihood in (log sz, log sy)
    auto neg_kalman = [&](const Vector& th) {
        LinearGaussianSsmSpec s = truth.core;
        s.process_cov(0, 0) = std::exp(2.0 * th[0]);
        s.obs_cov(0, 0) = std::exp(2.0 * th[1]);
        return -kalman_filter(s, sim.obs).log_likelihood;
    };
    const OptimResult ref = minimize_bfgs(neg_kalman, init);
    CHECK(fit.sigma_z == doctest::Approx(std::exp(ref.x[0])).epsilon(0.02));
    CHECK(fit.sigma_y == doctest::Approx(std::exp(ref.x[1])).epsilon(0.02));
}

TEST_CASE("parameter recovery on the heavy-tail design (one replicate)") {
    Rng rng = make_rng(2);
    const HeavyTailSsmSpec truth = make_spec(2, 1.0, 1.0, 5.0);
    const SimResult sim = simulate_heavy(truth, 2000, 0.4, rng);
    HeavyTailSsmSpec tmpl = truth;
    Vector init(3);
    init << std::log(0.6), std::log(1.5), std::log(8.0);
    const LaplaceFit fit = fit_laplace(tmpl, sim.obs, sim.missing, init);
    CHECK(fit.converged);
    CHECK(fit.sigma_z == doctest::Approx(1.0).epsilon(0.15));
    CHECK(fit.sigma_y == doctest::Approx(1.0).epsilon(0.15));
    CHECK(fit.nu == doctest::Approx(5.0).epsilon(0.15));
    CHECK(fit.std_errors.allFinite());
}

TEST_CASE("degenerate input is rejected") {
    const HeavyTailSsmSpec spec = make_spec(1, 1.0, 1.0, 4.0);
    CHECK_THROWS_AS((void)laplace_marginal(spec, Matrix(0, 1)), InvalidInput);
    CHECK_THROWS_AS((void)fit_laplace(spec, Matrix(0, 1), {}, Vector::Zero(3)), InvalidInput);
    HeavyTailSsmSpec bad = spec;
    bad.core.obs_matrix(0, 0) = 2.0;
    Matrix obs(2, 1);
    obs << 0.0, 1.0;
    CHECK_THROWS_AS((void)laplace_marginal(bad, obs), InvalidInput);
}
