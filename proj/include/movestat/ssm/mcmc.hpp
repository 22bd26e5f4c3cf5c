#pragma once

#include "movestat/core/rng.hpp"
#include "movestat/core/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace movestat {

// Sample a behaviour state from its exact conditional: p_i proportional to
// exp(log_left[i] + log_right[i]), where the two factors bracket time t.
// Endpoint updates pass a zero vector for the absent side.
int gibbs_state_update(const Vector& log_left, const Vector& log_right, Rng& rng);

using LogDensityOfPoint = std::function<double(const Vector&)>;

struct MhUpdateResult {
    Vector state;
    bool accepted = false;
    double log_accept_ratio = 0.0;
};

// Random-walk Metropolis-Hastings update of one location. The acceptance
// ratio multiplies whichever bridging factors are supplied (forward density
// of the point given its predecessor, backward density of the successor given
// the point, and an observation factor); endpoints simply omit the missing
// side. proposal_log_ratio carries log q(z|v) - log q(v|z) for asymmetric
// proposals; the default Gaussian random walk is symmetric so it is zero.
MhUpdateResult mh_location_update(const Vector& current, double proposal_sd, Rng& rng,
                                  const LogDensityOfPoint& log_forward,
                                  const LogDensityOfPoint& log_backward,
                                  const LogDensityOfPoint& log_obs = nullptr,
                                  double proposal_log_ratio = 0.0);

// Markov-switching Gaussian random walk observed with Gaussian noise:
//   z_t = z_{t-1} + drift[s_{t-1}] + N(0, sigma[s_{t-1}]^2 I)
//   y_t = z_t + N(0, obs_sigma^2 I)
// with s following a discrete Markov chain (trans, initial) and z_1 having
// prior N(init_mean, init_cov).
struct SwitchingRandomWalkSpec {
    int n_states = 1;
    Index dim = 1;
    Matrix trans;
    Vector initial;
    std::vector<Vector> drift;
    std::vector<double> sigma;
    double obs_sigma = 1.0;
    Vector init_mean;
    Matrix init_cov;

    void validate() const;
};

struct McmcOptions {
    int iterations = 10000;
    int burn_in = 1000;
    int thin = 10;                  // thinning for stored latent samples
    double z_proposal_sd = 1.0;
    double theta_proposal_sd = 0.2;
    bool update_locations = true;
    bool update_states = true;      // Gibbs draws of s_t
    bool update_theta = false;      // random-walk MH on log process/obs sd
    bool marginalize_states = false;  // replace s-updates by the forward-marginal likelihood
    std::uint64_t seed = 1;
};

struct ChainDiagnostics {
    double ess = 0.0;
    double rhat = 0.0;
};

struct McmcResult {
    Matrix z_mean;                      // T x dim posterior means
    Matrix state_probabilities;         // T x N occupancy frequencies
    Matrix theta_chain;                 // kept iterations x n_theta (log scale)
    std::vector<std::string> theta_names;
    std::vector<ChainDiagnostics> theta_diagnostics;
    std::vector<Matrix> z_samples;      // thinned latent draws
    double accept_rate_z = 0.0;
    double accept_rate_theta = 0.0;
};

McmcResult mcmc_ssm(const SwitchingRandomWalkSpec& spec, const Matrix& obs,
                    const std::vector<bool>& missing, const McmcOptions& opts);

// Effective sample size by Geyer's initial positive sequence, and split-chain
// potential scale reduction.
double chain_ess(const Vector& chain);
double split_rhat(const Vector& chain);

}  // namespace movestat
