#include "movestat/ssm/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace movestat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_iso(const Vector& x, const Vector& mean, double sd) {
    const double z2 = (x - mean).squaredNorm() / (sd * sd);
    return -0.5 * (x.size() * (kLogTwoPi + 2.0 * std::log(sd)) + z2);
}

double log_normal_full(const Vector& x, const Vector& mean, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    const Vector w = llt.matrixL().solve(x - mean);
    double logdet = 0.0;
    for (Index i = 0; i < cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
    return -0.5 * (x.size() * kLogTwoPi + w.squaredNorm()) - logdet;
}

}  // namespace

int gibbs_state_update(const Vector& log_left, const Vector& log_right, Rng& rng) {
    if (log_left.size() != log_right.size() || log_left.size() == 0) {
        throw InvalidInput("gibbs_state_update: factor length mismatch");
    }
    const Vector lp = log_left + log_right;
    const double shift = lp.maxCoeff();
    if (shift == kNegInf) {
        throw NumericalError("gibbs_state_update: all state probabilities are zero");
    }
    Vector p = (lp.array() - shift).exp();
    p /= p.sum();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u <= acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size() - 1);
}

MhUpdateResult mh_location_update(const Vector& current, double proposal_sd, Rng& rng,
                                  const LogDensityOfPoint& log_forward,
                                  const LogDensityOfPoint& log_backward,
                                  const LogDensityOfPoint& log_obs,
                                  double proposal_log_ratio) {
    std::normal_distribution<double> noise(0.0, proposal_sd);
    Vector proposal = current;
    for (Index i = 0; i < proposal.size(); ++i) proposal[i] += noise(rng);

    auto total = [&](const Vector& v) {
        double lp = 0.0;
        if (log_forward) lp += log_forward(v);
        if (log_backward) lp += log_backward(v);
        if (log_obs) lp += log_obs(v);
        return lp;
    };
    MhUpdateResult res;
    res.log_accept_ratio = total(proposal) - total(current) + proposal_log_ratio;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (std::log(unif(rng)) < res.log_accept_ratio) {
        res.state = proposal;
        res.accepted = true;
    } else {
        res.state = current;
    }
    return res;
}

void SwitchingRandomWalkSpec::validate() const {
    if (n_states < 1 || dim < 1) throw InvalidInput("SwitchingRandomWalkSpec: bad dimensions");
    if (trans.rows() != n_states || trans.cols() != n_states ||
        initial.size() != n_states ||
        drift.size() != static_cast<std::size_t>(n_states) ||
        sigma.size() != static_cast<std::size_t>(n_states)) {
        throw InvalidInput("SwitchingRandomWalkSpec: per-state arrays must match n_states");
    }
    for (const auto& mu : drift) {
        if (mu.size() != dim) throw InvalidInput("SwitchingRandomWalkSpec: drift dim mismatch");
    }
    for (double s : sigma) {
        if (!(s > 0.0)) throw InvalidInput("SwitchingRandomWalkSpec: sigma must be positive");
    }
    if (!(obs_sigma > 0.0)) throw InvalidInput("SwitchingRandomWalkSpec: obs sigma must be positive");
    if (init_mean.size() != dim || init_cov.rows() != dim) {
        throw InvalidInput("SwitchingRandomWalkSpec: initial state prior dim mismatch");
    }
}

namespace {

struct SamplerState {
    Matrix z;              // T x d
    std::vector<int> s;    // 0-based states
    std::vector<double> sigma;
    double obs_sigma;
};

// log f(z_{t} | z_{t-1}, state) for the switching random walk
double increment_logdens(const SwitchingRandomWalkSpec& spec, const SamplerState& st,
                         const Vector& z_prev, const Vector& z_next, int state) {
    return log_normal_iso(z_next, z_prev + spec.drift[static_cast<std::size_t>(state)],
                          st.sigma[static_cast<std::size_t>(state)]);
}

// Marginal log density of the whole latent path with states summed out by a
// forward recursion over the switching process.
double marginal_path_loglik(const SwitchingRandomWalkSpec& spec, const SamplerState& st,
                            const Matrix& z) {
    const Index t_len = z.rows();
    const int n = spec.n_states;
    Vector log_phi = spec.initial.array().log();
    double total = 0.0;
    for (Index t = 1; t < t_len; ++t) {
        Vector next(n);
        Vector inc(n);
        for (int i = 0; i < n; ++i) {
            inc[i] = increment_logdens(spec, st, z.row(t - 1).transpose(),
                                       z.row(t).transpose(), i);
        }
        // phi_j(t) = sum_i phi_i(t-1) * f(z_t | z_{t-1}, i) * Gamma_ij
        Vector prev = log_phi + inc;
        const double shift = prev.maxCoeff();
        if (shift == kNegInf) return kNegInf;
        const Vector w = (prev.array() - shift).exp();
        for (int j = 0; j < n; ++j) {
            next[j] = shift + std::log(w.dot(spec.trans.col(j)));
        }
        const double norm = next.maxCoeff();
        total += norm;
        log_phi = next.array() - norm;
    }
    const double tail = std::log((log_phi.array().exp()).sum());
    return total + tail;
}

}  // namespace

McmcResult mcmc_ssm(const SwitchingRandomWalkSpec& spec, const Matrix& obs,
                    const std::vector<bool>& missing, const McmcOptions& opts) {
    spec.validate();
    if (opts.iterations <= opts.burn_in) {
        throw InvalidInput("mcmc_ssm: iterations must exceed burn-in");
    }
    const Index t_len = obs.rows();
    if (t_len < 2) throw InvalidInput("mcmc_ssm: need at least 2 observations");
    if (obs.cols() != spec.dim) throw InvalidInput("mcmc_ssm: obs dim mismatch");
    auto observed = [&](Index t) {
        return missing.empty() || !missing[static_cast<std::size_t>(t)];
    };

    Rng rng = make_rng(opts.seed);
    SamplerState st;
    st.z = obs;
    for (Index t = 0; t < t_len; ++t) {
        if (!observed(t)) {
            if (t > 0) {
                st.z.row(t) = st.z.row(t - 1);
            } else {
                st.z.row(t) = spec.init_mean.transpose();
            }
        }
    }
    st.s.assign(static_cast<std::size_t>(t_len), 0);
    st.sigma = spec.sigma;
    st.obs_sigma = spec.obs_sigma;

    const int n_theta = spec.n_states + 1;
    const int kept = opts.iterations - opts.burn_in;

    McmcResult res;
    res.z_mean = Matrix::Zero(t_len, spec.dim);
    res.state_probabilities = Matrix::Zero(t_len, spec.n_states);
    res.theta_chain = Matrix::Zero(opts.update_theta ? kept : 0, n_theta);
    for (int i = 0; i < spec.n_states; ++i) {
        res.theta_names.push_back("log_sigma_" + std::to_string(i + 1));
    }
    res.theta_names.push_back("log_obs_sigma");

    auto obs_logdens = [&](Index t, const Vector& z) {
        return log_normal_iso(obs.row(t).transpose(), z, st.obs_sigma);
    };
    auto total_obs_loglik = [&]() {
        double total = 0.0;
        for (Index t = 0; t < t_len; ++t) {
            if (observed(t)) total += obs_logdens(t, st.z.row(t).transpose());
        }
        return total;
    };
    auto conditional_path_loglik = [&]() {
        double total = log_normal_full(st.z.row(0).transpose(), spec.init_mean, spec.init_cov);
        for (Index t = 1; t < t_len; ++t) {
            total += increment_logdens(spec, st, st.z.row(t - 1).transpose(),
                                       st.z.row(t).transpose(),
                                       st.s[static_cast<std::size_t>(t - 1)]);
        }
        return total;
    };
    auto process_loglik = [&]() {
        if (opts.marginalize_states) {
            return log_normal_full(st.z.row(0).transpose(), spec.init_mean, spec.init_cov) +
                   marginal_path_loglik(spec, st, st.z);
        }
        return conditional_path_loglik();
    };

    long z_accepts = 0, z_proposals = 0;
    long theta_accepts = 0, theta_proposals = 0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (int iter = 0; iter < opts.iterations; ++iter) {
        if (opts.update_theta) {
            for (int p = 0; p < n_theta; ++p) {
                const double before = process_loglik() + total_obs_loglik();
                const double old_sigma = (p < spec.n_states)
                                             ? st.sigma[static_cast<std::size_t>(p)]
                                             : st.obs_sigma;
                const double proposal = old_sigma * std::exp(opts.theta_proposal_sd * noise(rng));
                (p < spec.n_states ? st.sigma[static_cast<std::size_t>(p)] : st.obs_sigma) =
                    proposal;
                const double after = process_loglik() + total_obs_loglik();
                // flat prior on log sigma; log-normal random walk is symmetric in log space
                ++theta_proposals;
                if (std::log(unif(rng)) < after - before) {
                    ++theta_accepts;
                } else {
                    (p < spec.n_states ? st.sigma[static_cast<std::size_t>(p)] : st.obs_sigma) =
                        old_sigma;
                }
            }
        }

        if (opts.update_states && !opts.marginalize_states && spec.n_states > 1) {
            for (Index t = 0; t < t_len; ++t) {
                const auto tu = static_cast<std::size_t>(t);
                Vector left(spec.n_states), right(spec.n_states);
                for (int i = 0; i < spec.n_states; ++i) {
                    left[i] = (t == 0) ? std::log(spec.initial[i])
                                       : std::log(spec.trans(st.s[tu - 1], i));
                    if (t + 1 < t_len) {
                        right[i] = std::log(spec.trans(i, st.s[tu + 1])) +
                                   increment_logdens(spec, st, st.z.row(t).transpose(),
                                                     st.z.row(t + 1).transpose(), i);
                    } else {
                        right[i] = 0.0;  // terminal state has no bridging factor
                    }
                }
                st.s[tu] = gibbs_state_update(left, right, rng);
            }
        }

        if (opts.update_locations) {
            for (Index t = 0; t < t_len; ++t) {
                const auto tu = static_cast<std::size_t>(t);
                Vector current = st.z.row(t).transpose();
                MhUpdateResult upd;
                if (opts.marginalize_states) {
                    // whole-path marginal: evaluate the forward sum with the
                    // candidate value spliced in
                    Vector prop = current;
                    std::normal_distribution<double> step(0.0, opts.z_proposal_sd);
                    for (Index k = 0; k < prop.size(); ++k) prop[k] += step(rng);
                    Matrix z_prop = st.z;
                    z_prop.row(t) = prop.transpose();
                    double before = marginal_path_loglik(spec, st, st.z) +
                                    log_normal_full(st.z.row(0).transpose(), spec.init_mean,
                                                    spec.init_cov);
                    double after = marginal_path_loglik(spec, st, z_prop) +
                                   log_normal_full(z_prop.row(0).transpose(), spec.init_mean,
                                                   spec.init_cov);
                    if (observed(t)) {
                        before += obs_logdens(t, current);
                        after += obs_logdens(t, prop);
                    }
                    upd.log_accept_ratio = after - before;
                    upd.accepted = std::log(unif(rng)) < upd.log_accept_ratio;
                    upd.state = upd.accepted ? prop : current;
                } else {
                    LogDensityOfPoint forward, backward, obs_term;
                    if (t == 0) {
                        forward = [&](const Vector& v) {
                            return log_normal_full(v, spec.init_mean, spec.init_cov);
                        };
                    } else {
                        forward = [&](const Vector& v) {
                            return increment_logdens(spec, st, st.z.row(t - 1).transpose(), v,
                                                     st.s[tu - 1]);
                        };
                    }
                    if (t + 1 < t_len) {
                        backward = [&](const Vector& v) {
                            return increment_logdens(spec, st, v, st.z.row(t + 1).transpose(),
                                                     st.s[tu]);
                        };
                    }
                    if (observed(t)) {
                        obs_term = [&](const Vector& v) { return obs_logdens(t, v); };
                    }
                    upd = mh_location_update(current, opts.z_proposal_sd, rng, forward,
                                             backward, obs_term);
                }
                ++z_proposals;
                if (upd.accepted) {
                    ++z_accepts;
                    st.z.row(t) = upd.state.transpose();
                }
            }
        }

        if (iter >= opts.burn_in) {
            const int k = iter - opts.burn_in;
            res.z_mean += st.z;
            for (Index t = 0; t < t_len; ++t) {
                res.state_probabilities(t, st.s[static_cast<std::size_t>(t)]) += 1.0;
            }
            if (opts.update_theta) {
                for (int p = 0; p < spec.n_states; ++p) {
                    res.theta_chain(k, p) = std::log(st.sigma[static_cast<std::size_t>(p)]);
                }
                res.theta_chain(k, spec.n_states) = std::log(st.obs_sigma);
            }
            if (opts.thin > 0 && k % opts.thin == 0) res.z_samples.push_back(st.z);
        }
    }

    res.z_mean /= static_cast<double>(kept);
    res.state_probabilities /= static_cast<double>(kept);
    res.accept_rate_z = z_proposals ? static_cast<double>(z_accepts) / z_proposals : 0.0;
    res.accept_rate_theta =
        theta_proposals ? static_cast<double>(theta_accepts) / theta_proposals : 0.0;
    if (opts.update_theta) {
        for (int p = 0; p < n_theta; ++p) {
            ChainDiagnostics diag;
            diag.ess = chain_ess(res.theta_chain.col(p));
            diag.rhat = split_rhat(res.theta_chain.col(p));
            res.theta_diagnostics.push_back(diag);
        }
    }
    return res;
}

double chain_ess(const Vector& chain) {
    const Index n = chain.size();
    if (n < 4) return static_cast<double>(n);
    const double mean = chain.mean();
    const Vector c = chain.array() - mean;
    const double c0 = c.squaredNorm() / n;
    if (!(c0 > 0.0)) return static_cast<double>(n);
    auto acov = [&](Index k) {
        double s = 0.0;
        for (Index t = 0; t + k < n; ++t) s += c[t] * c[t + k];
        return s / n;
    };
    double tau = 1.0;
    const Index max_lag = std::min<Index>(n - 2, 2000);
    for (Index k = 1; k + 1 <= max_lag; k += 2) {
        const double pair = (acov(k) + acov(k + 1)) / c0;
        if (pair <= 0.0) break;
        tau += 2.0 * pair;
    }
    return static_cast<double>(n) / tau;
}

double split_rhat(const Vector& chain) {
    const Index n = chain.size() / 2;
    if (n < 2) return 1.0;
    const Vector a = chain.head(n), b = chain.segment(n, n);
    const double ma = a.mean(), mb = b.mean();
    const double va = (a.array() - ma).square().sum() / (n - 1);
    const double vb = (b.array() - mb).square().sum() / (n - 1);
    const double w = 0.5 * (va + vb);
    const double mean = 0.5 * (ma + mb);
    const double bvar = n * ((ma - mean) * (ma - mean) + (mb - mean) * (mb - mean));
    if (!(w > 0.0)) return 1.0;
    const double var_plus = (n - 1.0) / n * w + bvar / n;
    return std::sqrt(var_plus / w);
}

}  // namespace movestat
