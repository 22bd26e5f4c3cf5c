#include "movestat/hmm/hmm.hpp"

#include "movestat/core/special.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

namespace movestat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int pair_row(int n, int i, int j) { return i * (n - 1) + (j < i ? j : j - 1); }

// Per-observation evaluator with the distribution constants hoisted out of
// the likelihood loop.
using LogDensityFn = std::function<double(double)>;

LogDensityFn prepare_log_density(const EmissionDist& d) {
    if (const auto* g = d.get_if<Gamma>()) {
        const double am1 = g->shape - 1.0;
        const double inv_scale = 1.0 / g->scale;
        const double c = -std::lgamma(g->shape) - g->shape * std::log(g->scale);
        return [=](double x) {
            if (x <= 0.0) return kNegInf;
            return c + am1 * std::log(x) - x * inv_scale;
        };
    }
    if (const auto* w = d.get_if<Weibull>()) {
        const double k = w->shape;
        const double inv_scale = 1.0 / w->scale;
        const double c = std::log(k * inv_scale);
        return [=](double x) {
            if (x <= 0.0) return kNegInf;
            const double z = x * inv_scale;
            return c + (k - 1.0) * std::log(z) - std::pow(z, k);
        };
    }
    if (const auto* v = d.get_if<VonMises>()) {
        const double mu = v->mean, kappa = v->kappa;
        const double c = std::log(kTwoPi) + log_bessel_i0(kappa);
        return [=](double x) { return kappa * std::cos(x - mu) - c; };
    }
    if (const auto* wc = d.get_if<WrappedCauchy>()) {
        const double mu = wc->mean, rho = wc->rho;
        const double c = std::log1p(-rho * rho) - std::log(kTwoPi);
        const double r2p1 = 1.0 + rho * rho;
        return [=](double x) { return c - std::log(r2p1 - 2.0 * rho * std::cos(x - mu)); };
    }
    if (const auto* n = d.get_if<Gaussian>()) {
        const double mu = n->mean;
        const double inv_var = 1.0 / n->var;
        const double c = -0.5 * (kLogTwoPi + std::log(n->var));
        return [=](double x) {
            const double z = x - mu;
            return c - 0.5 * z * z * inv_var;
        };
    }
    if (const auto* z = d.get_if<ZeroInflated>()) {
        const double log_pi0 = z->zero_mass > 0.0 ? std::log(z->zero_mass) : kNegInf;
        const double log_rest = z->zero_mass < 1.0 ? std::log1p(-z->zero_mass) : kNegInf;
        LogDensityFn inner = prepare_log_density(*z->inner);
        return [=](double x) {
            if (x == 0.0) return log_pi0;
            return log_rest + inner(x);
        };
    }
    return [&d](double x) { return log_density(d, x); };
}

// T x N matrix of per-state log emission terms; invalid entries contribute 0
// for the affected channel (equivalently a unit likelihood factor).
Matrix log_emission_matrix(const HmmSpec& spec, const StepTurnSeries& data) {
    const Index t_len = data.size();
    const int n = spec.n_states();
    Matrix logq = Matrix::Zero(t_len, n);
    for (int i = 0; i < n; ++i) {
        const auto step_f = prepare_log_density(spec.step_dists[static_cast<std::size_t>(i)]);
        const auto turn_f = prepare_log_density(spec.turn_dists[static_cast<std::size_t>(i)]);
        for (Index t = 0; t < t_len; ++t) {
            double v = 0.0;
            if (data.step_valid[static_cast<std::size_t>(t)]) v += step_f(data.steps[t]);
            if (data.turn_valid[static_cast<std::size_t>(t)]) v += turn_f(data.turns[t]);
            logq(t, i) = v;
        }
    }
    return logq;
}

std::vector<Matrix> transition_sequence(const TransitionModel& tm, const Matrix& covs,
                                        Index t_len) {
    std::vector<Matrix> gammas;
    if (tm.homogeneous()) {
        gammas.push_back(transition_matrix_at(tm, Vector()));
        return gammas;  // single shared matrix
    }
    if (covs.rows() != t_len || covs.cols() != tm.n_covariates()) {
        throw InvalidInput("hmm: covariate matrix must be T x p for the model's covariates");
    }
    gammas.reserve(static_cast<std::size_t>(t_len));
    for (Index t = 0; t < t_len; ++t) {
        gammas.push_back(transition_matrix_at(tm, covs.row(t).transpose()));
    }
    return gammas;
}

const Matrix& gamma_at(const std::vector<Matrix>& gammas, Index t) {
    return gammas.size() == 1 ? gammas[0] : gammas[static_cast<std::size_t>(t)];
}

struct ForwardPass {
    Matrix alpha_hat;      // T x N, normalized forward probabilities
    Matrix predicted;      // T x N, P(S_t = i | data before t)
    Vector log_scale;      // per-step log normalizers
    double log_likelihood = kNegInf;
};

ForwardPass forward_pass(const HmmSpec& spec, const StepTurnSeries& data, const Matrix& covs) {
    const Index t_len = data.size();
    const int n = spec.n_states();
    ForwardPass fp;
    if (t_len == 0) throw InvalidInput("hmm: empty series");
    const Matrix logq = log_emission_matrix(spec, data);
    if ((logq.array() != logq.array()).any()) {
        return fp;  // NaN in emissions -> -inf likelihood
    }
    const auto gammas = transition_sequence(spec.transition, covs, t_len);
    const Vector delta = initial_distribution(spec.transition);

    fp.alpha_hat.resize(t_len, n);
    fp.predicted.resize(t_len, n);
    fp.log_scale.resize(t_len);
    double ll = 0.0;
    Vector phi(n);
    for (Index t = 0; t < t_len; ++t) {
        Vector pred(n);
        if (t == 0) {
            pred = delta;
        } else {
            pred = gamma_at(gammas, t).transpose() * phi;
        }
        fp.predicted.row(t) = pred.transpose();
        const double shift = logq.row(t).maxCoeff();
        if (shift == kNegInf) return fp;  // zero likelihood
        Vector q = (logq.row(t).transpose().array() - shift).exp();
        phi = pred.cwiseProduct(q);
        const double norm = phi.sum();
        if (!(norm > 0.0) || !std::isfinite(norm)) return fp;
        phi /= norm;
        fp.log_scale[t] = shift + std::log(norm);
        ll += fp.log_scale[t];
        fp.alpha_hat.row(t) = phi.transpose();
    }
    fp.log_likelihood = ll;
    return fp;
}

}  // namespace

void TransitionModel::validate() const {
    if (n_states < 1) throw InvalidInput("TransitionModel: need at least one state");
    if (beta.rows() != n_pairs() || beta.cols() != 1 + n_covariates()) {
        throw InvalidInput("TransitionModel: beta must be N(N-1) x (1+p)");
    }
    if (init_mode == InitMode::Estimated) {
        if (delta.size() != n_states) throw InvalidInput("TransitionModel: delta size mismatch");
        if (std::abs(delta.sum() - 1.0) > 1e-8 || (delta.array() < 0.0).any()) {
            throw InvalidInput("TransitionModel: delta must be a probability vector");
        }
    }
}

TransitionModel TransitionModel::homogeneous_model(int n_states) {
    TransitionModel tm;
    tm.n_states = n_states;
    tm.beta = Matrix::Zero(tm.n_pairs(), 1);
    return tm;
}

Matrix transition_matrix_at(const TransitionModel& tm, const Vector& covs) {
    const int n = tm.n_states;
    Matrix eta = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto row = tm.beta.row(pair_row(n, i, j));
            double v = row[0];
            for (int l = 0; l < tm.n_covariates(); ++l) v += row[1 + l] * covs[l];
            eta(i, j) = v;
        }
    }
    Matrix tpm(n, n);
    for (int i = 0; i < n; ++i) {
        const double shift = eta.row(i).maxCoeff();
        Vector ex = (eta.row(i).transpose().array() - shift).exp();
        tpm.row(i) = (ex / ex.sum()).transpose();
    }
    return tpm;
}

Vector stationary_distribution(const Matrix& tpm) {
    const Index n = tpm.rows();
    const Matrix a = (Matrix::Identity(n, n) - tpm + Matrix::Ones(n, n)).transpose();
    Vector pi = a.fullPivLu().solve(Vector::Ones(n));
    pi = pi.cwiseMax(0.0);
    return pi / pi.sum();
}

Vector initial_distribution(const TransitionModel& tm) {
    switch (tm.init_mode) {
        case TransitionModel::InitMode::Estimated:
            return tm.delta;
        case TransitionModel::InitMode::Uniform:
            return Vector::Constant(tm.n_states, 1.0 / tm.n_states);
        case TransitionModel::InitMode::Stationary:
            if (!tm.homogeneous()) {
                return Vector::Constant(tm.n_states, 1.0 / tm.n_states);
            }
            return stationary_distribution(transition_matrix_at(tm, Vector()));
    }
    throw InvalidInput("initial_distribution: unknown mode");
}

void HmmSpec::validate() const {
    transition.validate();
    const auto n = static_cast<std::size_t>(n_states());
    if (step_dists.size() != n || turn_dists.size() != n) {
        throw InvalidInput("HmmSpec: need one step and one turn distribution per state");
    }
    for (const auto& d : turn_dists) {
        if (!is_circular(d)) throw InvalidInput("HmmSpec: turn distributions must be circular");
    }
}

HmmTrack make_track(const Trajectory& traj) {
    HmmTrack track;
    track.id = traj.id;
    track.series = derive_steps_turns(traj);
    track.covariate_names = traj.covariate_names;
    // covariates align to the left endpoint of each step interval
    track.covariates = traj.covariates.topRows(track.series.size());
    return track;
}

Matrix select_covariates(const HmmTrack& track, const std::vector<std::string>& names) {
    Matrix out(track.series.size(), static_cast<Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        auto it = std::find(track.covariate_names.begin(), track.covariate_names.end(), names[j]);
        if (it == track.covariate_names.end()) {
            throw InvalidInput("track '" + track.id + "': covariate '" + names[j] + "' not found");
        }
        out.col(static_cast<Index>(j)) =
            track.covariates.col(it - track.covariate_names.begin());
    }
    return out;
}

double log_likelihood_forward(const HmmSpec& spec, const StepTurnSeries& data,
                              const Matrix& covs) {
    return forward_pass(spec, data, covs).log_likelihood;
}

double log_likelihood_forward(const HmmSpec& spec, const HmmDataset& data, int workers) {
    if (data.empty()) throw InvalidInput("hmm: empty dataset");
    const auto& names = spec.transition.covariate_names;
    auto one = [&](const HmmTrack& track) {
        const Matrix covs = names.empty() ? Matrix() : select_covariates(track, names);
        return log_likelihood_forward(spec, track.series, covs);
    };
    if (workers <= 1 || data.size() == 1) {
        double total = 0.0;
        for (const auto& track : data) total += one(track);
        return total;
    }
    std::vector<std::future<double>> futures;
    futures.reserve(data.size());
    for (const auto& track : data) {
        futures.push_back(std::async(std::launch::async, one, std::cref(track)));
    }
    double total = 0.0;
    for (auto& f : futures) total += f.get();  // fixed track order
    return total;
}

double log_likelihood_bruteforce(const HmmSpec& spec, const StepTurnSeries& data,
                                 const Matrix& covs) {
    const Index t_len = data.size();
    const int n = spec.n_states();
    const double n_seq = std::pow(static_cast<double>(n), static_cast<double>(t_len));
    if (n_seq > 1e7) throw InvalidInput("log_likelihood_bruteforce: N^T exceeds 1e7");
    const Matrix logq = log_emission_matrix(spec, data);
    const auto gammas = transition_sequence(spec.transition, covs, t_len);
    Matrix log_gamma_shared;
    std::vector<Matrix> log_gammas;
    if (gammas.size() == 1) {
        log_gamma_shared = gammas[0].array().log();
    } else {
        for (const auto& g : gammas) log_gammas.push_back(g.array().log());
    }
    auto log_gamma_at = [&](Index t) -> const Matrix& {
        return log_gammas.empty() ? log_gamma_shared : log_gammas[static_cast<std::size_t>(t)];
    };
    const Vector log_delta = initial_distribution(spec.transition).array().log();

    std::vector<int> states(static_cast<std::size_t>(t_len), 0);
    double max_lp = kNegInf;
    double sum_exp = 0.0;
    for (;;) {
        double lp = log_delta[states[0]] + logq(0, states[0]);
        for (Index t = 1; t < t_len; ++t) {
            lp += log_gamma_at(t)(states[static_cast<std::size_t>(t - 1)],
                                  states[static_cast<std::size_t>(t)]) +
                  logq(t, states[static_cast<std::size_t>(t)]);
        }
        // streaming log-sum-exp
        if (lp > max_lp) {
            sum_exp = sum_exp * std::exp(max_lp - lp) + 1.0;
            max_lp = lp;
        } else if (lp > kNegInf) {
            sum_exp += std::exp(lp - max_lp);
        }
        Index pos = t_len - 1;
        while (pos >= 0) {
            auto& s = states[static_cast<std::size_t>(pos)];
            if (++s < n) break;
            s = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return max_lp + std::log(sum_exp);
}

int count_free_parameters(const HmmSpec& spec) {
    int count = static_cast<int>(spec.transition.beta.size());
    if (spec.transition.init_mode == TransitionModel::InitMode::Estimated) {
        count += spec.n_states() - 1;
    }
    for (const auto& d : spec.step_dists) count += working_param_count(d);
    for (const auto& d : spec.turn_dists) count += working_param_count(d);
    return count;
}

Vector pack_hmm_params(const HmmSpec& spec) {
    Vector out(count_free_parameters(spec));
    Index pos = 0;
    for (Index r = 0; r < spec.transition.beta.rows(); ++r) {
        for (Index c = 0; c < spec.transition.beta.cols(); ++c) {
            out[pos++] = spec.transition.beta(r, c);
        }
    }
    if (spec.transition.init_mode == TransitionModel::InitMode::Estimated) {
        for (int i = 1; i < spec.n_states(); ++i) {
            out[pos++] = std::log(std::max(spec.transition.delta[i], 1e-12)) -
                         std::log(std::max(spec.transition.delta[0], 1e-12));
        }
    }
    for (const auto& d : spec.step_dists) {
        pack_working_params(d, out.data() + pos);
        pos += working_param_count(d);
    }
    for (const auto& d : spec.turn_dists) {
        pack_working_params(d, out.data() + pos);
        pos += working_param_count(d);
    }
    return out;
}

HmmSpec unpack_hmm_params(const HmmSpec& tmpl, const Vector& params) {
    HmmSpec spec = tmpl;
    Index pos = 0;
    for (Index r = 0; r < spec.transition.beta.rows(); ++r) {
        for (Index c = 0; c < spec.transition.beta.cols(); ++c) {
            spec.transition.beta(r, c) = params[pos++];
        }
    }
    if (spec.transition.init_mode == TransitionModel::InitMode::Estimated) {
        Vector logits = Vector::Zero(spec.n_states());
        for (int i = 1; i < spec.n_states(); ++i) logits[i] = params[pos++];
        const double shift = logits.maxCoeff();
        Vector ex = (logits.array() - shift).exp();
        spec.transition.delta = ex / ex.sum();
    }
    for (auto& d : spec.step_dists) {
        d = unpack_working_params(d, params.data() + pos);
        pos += working_param_count(d);
    }
    for (auto& d : spec.turn_dists) {
        d = unpack_working_params(d, params.data() + pos);
        pos += working_param_count(d);
    }
    return spec;
}

namespace {

HmmSpec relabel_by_mean_step(const HmmSpec& spec) {
    const int n = spec.n_states();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        return mean(spec.step_dists[static_cast<std::size_t>(a)]) <
               mean(spec.step_dists[static_cast<std::size_t>(b)]);
    });
    HmmSpec out = spec;
    for (int i = 0; i < n; ++i) {
        out.step_dists[static_cast<std::size_t>(i)] =
            spec.step_dists[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        out.turn_dists[static_cast<std::size_t>(i)] =
            spec.turn_dists[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            out.transition.beta.row(pair_row(n, i, j)) = spec.transition.beta.row(
                pair_row(n, perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
        }
    }
    if (spec.transition.init_mode == TransitionModel::InitMode::Estimated) {
        for (int i = 0; i < n; ++i) {
            out.transition.delta[i] = spec.transition.delta[perm[static_cast<std::size_t>(i)]];
        }
    }
    return out;
}

}  // namespace

FittedHmm fit_mle(const HmmSpec& init, const HmmDataset& data, const HmmFitOptions& opts) {
    init.validate();
    if (data.empty()) throw InvalidInput("fit_mle: empty dataset");
    const Vector theta0 = pack_hmm_params(init);
    {
        const double ll0 = log_likelihood_forward(unpack_hmm_params(init, theta0), data,
                                                  opts.workers);
        if (!std::isfinite(ll0)) {
            throw NumericalError("fit_mle: non-finite likelihood at the initial parameters");
        }
    }
    auto objective = [&](const Vector& theta) {
        try {
            const HmmSpec spec = unpack_hmm_params(init, theta);
            return -log_likelihood_forward(spec, data, opts.workers);
        } catch (const InvalidInput&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const MultiStartResult ms =
        minimize_multistart(objective, theta0, opts.restarts, opts.seed, opts.perturb_sd,
                            opts.optim);

    HmmSpec fitted = relabel_by_mean_step(unpack_hmm_params(init, ms.best.x));
    FittedHmm fit;
    fit.spec = fitted;
    fit.working_params = pack_hmm_params(fitted);
    fit.log_likelihood = log_likelihood_forward(fitted, data, opts.workers);
    fit.n_parameters = count_free_parameters(fitted);
    fit.aic = -2.0 * fit.log_likelihood + 2.0 * fit.n_parameters;
    fit.report.converged = ms.best.converged;
    fit.report.grad_norm = ms.best.grad_norm;
    fit.report.iterations = ms.best.iterations;
    fit.report.n_starts = ms.n_starts;
    fit.report.n_converged = ms.n_converged;
    return fit;
}

std::vector<int> viterbi(const HmmSpec& spec, const StepTurnSeries& data, const Matrix& covs) {
    const Index t_len = data.size();
    const int n = spec.n_states();
    const Matrix logq = log_emission_matrix(spec, data);
    const auto gammas = transition_sequence(spec.transition, covs, t_len);
    std::vector<Matrix> log_gammas;
    for (const auto& g : gammas) log_gammas.push_back(g.array().log());
    auto lg = [&](Index t) -> const Matrix& {
        return log_gammas.size() == 1 ? log_gammas[0] : log_gammas[static_cast<std::size_t>(t)];
    };

    Matrix score(t_len, n);
    Eigen::MatrixXi back(t_len, n);
    score.row(0) =
        (initial_distribution(spec.transition).array().log() + logq.row(0).transpose().array())
            .transpose();
    for (Index t = 1; t < t_len; ++t) {
        for (int j = 0; j < n; ++j) {
            double best = kNegInf;
            int arg = 0;
            for (int i = 0; i < n; ++i) {
                const double v = score(t - 1, i) + lg(t)(i, j);
                if (v > best) {  // strict: ties keep the lower index
                    best = v;
                    arg = i;
                }
            }
            score(t, j) = best + logq(t, j);
            back(t, j) = arg;
        }
    }
    std::vector<int> path(static_cast<std::size_t>(t_len));
    int cur = 0;
    double best = kNegInf;
    for (int j = 0; j < n; ++j) {
        if (score(t_len - 1, j) > best) {
            best = score(t_len - 1, j);
            cur = j;
        }
    }
    for (Index t = t_len - 1; t >= 0; --t) {
        path[static_cast<std::size_t>(t)] = cur + 1;  // states reported 1-based
        if (t > 0) cur = back(t, cur);
    }
    return path;
}

std::vector<int> viterbi(const FittedHmm& fit, const HmmTrack& track) {
    const auto& names = fit.spec.transition.covariate_names;
    return viterbi(fit.spec, track.series,
                   names.empty() ? Matrix() : select_covariates(track, names));
}

Matrix state_probabilities(const HmmSpec& spec, const StepTurnSeries& data, const Matrix& covs) {
    const Index t_len = data.size();
    const int n = spec.n_states();
    const ForwardPass fp = forward_pass(spec, data, covs);
    if (!std::isfinite(fp.log_likelihood)) {
        throw NumericalError("state_probabilities: zero-likelihood series");
    }
    const Matrix logq = log_emission_matrix(spec, data);
    const auto gammas = transition_sequence(spec.transition, covs, t_len);

    Matrix beta_hat(t_len, n);
    beta_hat.row(t_len - 1).setOnes();
    for (Index t = t_len - 2; t >= 0; --t) {
        const double shift = logq.row(t + 1).maxCoeff();
        const Vector q = (logq.row(t + 1).transpose().array() - shift).exp();
        const Vector w = q.cwiseProduct(beta_hat.row(t + 1).transpose());
        // shares the forward scale: log_scale[t+1] = shift + log(norm)
        const double scale = std::exp(fp.log_scale[t + 1] - shift);
        beta_hat.row(t) = (gamma_at(gammas, t + 1) * w / scale).transpose();
    }
    Matrix smoothed = fp.alpha_hat.cwiseProduct(beta_hat);
    for (Index t = 0; t < t_len; ++t) smoothed.row(t) /= smoothed.row(t).sum();
    return smoothed;
}

Matrix state_probabilities(const FittedHmm& fit, const HmmTrack& track) {
    const auto& names = fit.spec.transition.covariate_names;
    return state_probabilities(fit.spec, track.series,
                               names.empty() ? Matrix() : select_covariates(track, names));
}

Matrix filtered_state_probabilities(const HmmSpec& spec, const StepTurnSeries& data,
                                    const Matrix& covs) {
    const ForwardPass fp = forward_pass(spec, data, covs);
    if (!std::isfinite(fp.log_likelihood)) {
        throw NumericalError("filtered_state_probabilities: zero-likelihood series");
    }
    return fp.alpha_hat;
}

PseudoResiduals pseudo_residuals(const HmmSpec& spec, const StepTurnSeries& data,
                                 const Matrix& covs, std::uint64_t seed) {
    const Index t_len = data.size();
    const int n = spec.n_states();
    const ForwardPass fp = forward_pass(spec, data, covs);
    if (!std::isfinite(fp.log_likelihood)) {
        throw NumericalError("pseudo_residuals: zero-likelihood series");
    }
    Rng rng = substream(seed, 0x7265u);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PseudoResiduals res;
    res.step = Vector::Zero(t_len);
    res.turn = Vector::Zero(t_len);
    res.step_valid = data.step_valid;
    res.turn_valid = data.turn_valid;
    for (Index t = 0; t < t_len; ++t) {
        const Vector u = fp.predicted.row(t).transpose() / fp.predicted.row(t).sum();
        if (data.step_valid[static_cast<std::size_t>(t)]) {
            double lo = 0.0, hi = 0.0;
            for (int i = 0; i < n; ++i) {
                lo += u[i] * cdf_left(spec.step_dists[static_cast<std::size_t>(i)], data.steps[t]);
                hi += u[i] * cdf(spec.step_dists[static_cast<std::size_t>(i)], data.steps[t]);
            }
            double v = (hi > lo) ? lo + unif(rng) * (hi - lo) : hi;
            v = std::min(std::max(v, 1e-15), 1.0 - 1e-15);
            res.step[t] = normal_quantile(v);
        }
        if (data.turn_valid[static_cast<std::size_t>(t)]) {
            double v = 0.0;
            for (int i = 0; i < n; ++i) {
                v += u[i] * cdf(spec.turn_dists[static_cast<std::size_t>(i)], data.turns[t]);
            }
            v = std::min(std::max(v, 1e-15), 1.0 - 1e-15);
            res.turn[t] = normal_quantile(v);
        }
    }
    return res;
}

namespace {

int sample_categorical(const Vector& probs, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    for (Index i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u <= acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
}

}  // namespace

std::pair<std::vector<int>, StepTurnSeries> simulate_hmm(const HmmSpec& spec, Index t_len,
                                                         const Matrix& covs, Rng& rng) {
    spec.validate();
    if (t_len < 1) throw InvalidInput("simulate_hmm: need T >= 1");
    const auto gammas = transition_sequence(spec.transition, covs, t_len);
    const Vector delta = initial_distribution(spec.transition);

    std::vector<int> states(static_cast<std::size_t>(t_len));
    StepTurnSeries s;
    s.steps = Vector::Zero(t_len);
    s.turns = Vector::Zero(t_len);
    s.step_valid.assign(static_cast<std::size_t>(t_len), true);
    s.turn_valid.assign(static_cast<std::size_t>(t_len), true);

    int cur = sample_categorical(delta, rng);
    for (Index t = 0; t < t_len; ++t) {
        if (t > 0) cur = sample_categorical(gamma_at(gammas, t).row(cur).transpose(), rng);
        states[static_cast<std::size_t>(t)] = cur + 1;
        s.steps[t] = sample(spec.step_dists[static_cast<std::size_t>(cur)], rng);
        s.turns[t] = wrap_angle(sample(spec.turn_dists[static_cast<std::size_t>(cur)], rng));
    }
    s.turn_valid[0] = false;
    for (Index t = 1; t < t_len; ++t) {
        if (s.steps[t] == 0.0 || s.steps[t - 1] == 0.0) {
            s.turn_valid[static_cast<std::size_t>(t)] = false;
        }
    }
    return {states, s};
}

SelectionReport select_covariates_forward(const HmmSpec& base,
                                          const std::vector<std::string>& candidates,
                                          const HmmDataset& data, const HmmFitOptions& opts) {
    if (candidates.size() > 32) {
        throw InvalidInput("select_covariates_forward: more than 32 candidates");
    }
    for (const auto& track : data) {
        for (const auto& c : candidates) {
            if (std::find(track.covariate_names.begin(), track.covariate_names.end(), c) ==
                track.covariate_names.end()) {
                throw InvalidInput("candidate covariate '" + c + "' missing from track '" +
                                   track.id + "'");
            }
        }
    }

    SelectionReport report;
    FittedHmm current = fit_mle(base, data, opts);
    report.base_aic = current.aic;

    HmmFitOptions step_opts = opts;
    step_opts.restarts = std::max(1, opts.restarts / 5);
    step_opts.perturb_sd = 0.3;

    std::vector<std::string> remaining = candidates;
    while (!remaining.empty()) {
        SelectionStep step;
        step.aic_before = current.aic;
        bool have_best = false;
        FittedHmm best_fit;
        std::size_t best_idx = 0;
        for (std::size_t c = 0; c < remaining.size(); ++c) {
            HmmSpec trial = current.spec;  // warm start at the current optimum
            trial.transition.covariate_names.push_back(remaining[c]);
            Matrix beta(trial.transition.beta.rows(), trial.transition.beta.cols() + 1);
            beta << trial.transition.beta,
                Vector::Zero(trial.transition.beta.rows());
            trial.transition.beta = beta;
            FittedHmm fit = fit_mle(trial, data, step_opts);
            step.candidates.push_back({remaining[c], fit.aic});
            if (!have_best || fit.aic < best_fit.aic) {  // ties keep the first listed
                have_best = true;
                best_fit = fit;
                best_idx = c;
            }
        }
        if (!have_best || best_fit.aic >= current.aic) break;
        step.accepted = remaining[best_idx];
        step.aic_after = best_fit.aic;
        step.delta_aic = step.aic_before - step.aic_after;
        report.steps.push_back(step);
        report.selected.push_back(step.accepted);
        current = best_fit;
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_idx));
    }
    report.final_aic = current.aic;
    report.final_fit = current;
    return report;
}

}  // namespace movestat
