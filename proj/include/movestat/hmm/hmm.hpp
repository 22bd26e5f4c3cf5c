#pragma once

#include "movestat/core/optim.hpp"
#include "movestat/core/rng.hpp"
#include "movestat/distributions/distributions.hpp"
#include "movestat/trajectory/trajectory.hpp"

#include <string>
#include <utility>
#include <vector>

namespace movestat {

// Covariate-linked transition probabilities through a multinomial logit link
// with the diagonal as reference category. beta holds one row per ordered
// state pair (i, j), i != j, in row-major order; column 0 is the intercept
// and the remaining columns are slopes on the named covariates.
struct TransitionModel {
    enum class InitMode { Stationary, Uniform, Estimated };

    int n_states = 1;
    std::vector<std::string> covariate_names;
    Matrix beta;        // n_states*(n_states-1) x (1 + p)
    InitMode init_mode = InitMode::Stationary;
    Vector delta;       // used when init_mode == Estimated

    int n_covariates() const { return static_cast<int>(covariate_names.size()); }
    int n_pairs() const { return n_states * (n_states - 1); }
    bool homogeneous() const { return covariate_names.empty(); }
    void validate() const;

    static TransitionModel homogeneous_model(int n_states);
};

Matrix transition_matrix_at(const TransitionModel& tm, const Vector& covs);
Vector stationary_distribution(const Matrix& tpm);
Vector initial_distribution(const TransitionModel& tm);

struct HmmSpec {
    TransitionModel transition;
    std::vector<EmissionDist> step_dists;
    std::vector<EmissionDist> turn_dists;

    int n_states() const { return transition.n_states; }
    void validate() const;
};

// One observed track: the derived series plus covariates aligned to its
// indices (row k belongs to the interval starting at position k).
struct HmmTrack {
    std::string id;
    StepTurnSeries series;
    std::vector<std::string> covariate_names;
    Matrix covariates;  // T x p_all
};
using HmmDataset = std::vector<HmmTrack>;

HmmTrack make_track(const Trajectory& traj);
// Columns of the track's covariates selected by name, in model order.
Matrix select_covariates(const HmmTrack& track, const std::vector<std::string>& names);

double log_likelihood_forward(const HmmSpec& spec, const StepTurnSeries& data,
                              const Matrix& covs);
double log_likelihood_forward(const HmmSpec& spec, const HmmDataset& data, int workers = 1);
// Exact enumeration over all state sequences; guarded to N^T <= 1e7.
double log_likelihood_bruteforce(const HmmSpec& spec, const StepTurnSeries& data,
                                 const Matrix& covs);

struct ConvergenceReport {
    bool converged = false;
    double grad_norm = 0.0;
    int iterations = 0;
    int n_starts = 0;
    int n_converged = 0;
};

struct FittedHmm {
    HmmSpec spec;
    double log_likelihood = 0.0;
    int n_parameters = 0;
    Vector working_params;
    ConvergenceReport report;
    double aic = 0.0;
};

struct HmmFitOptions {
    int restarts = 10;
    std::uint64_t seed = 1;
    double perturb_sd = 0.7;
    int workers = 1;
    OptimOptions optim;
};

int count_free_parameters(const HmmSpec& spec);
Vector pack_hmm_params(const HmmSpec& spec);
HmmSpec unpack_hmm_params(const HmmSpec& shape_template, const Vector& params);

// Maximum likelihood over working parameters; states are relabeled in
// ascending order of mean step length after the fit.
FittedHmm fit_mle(const HmmSpec& init, const HmmDataset& data, const HmmFitOptions& opts = {});

std::vector<int> viterbi(const HmmSpec& spec, const StepTurnSeries& data, const Matrix& covs);
std::vector<int> viterbi(const FittedHmm& fit, const HmmTrack& track);

// Smoothed state probabilities from a shared-scale forward/backward pass.
Matrix state_probabilities(const HmmSpec& spec, const StepTurnSeries& data, const Matrix& covs);
Matrix state_probabilities(const FittedHmm& fit, const HmmTrack& track);

// Filtered probabilities P(S_t | z_{1:t}); used as a particle-filter oracle.
Matrix filtered_state_probabilities(const HmmSpec& spec, const StepTurnSeries& data,
                                    const Matrix& covs);

struct PseudoResiduals {
    Vector step;
    Vector turn;
    std::vector<bool> step_valid;
    std::vector<bool> turn_valid;
};

// One-step-ahead normal-quantile residuals; atoms (zero-inflated steps) are
// randomized uniformly over the cdf jump using the given seed.
PseudoResiduals pseudo_residuals(const HmmSpec& spec, const StepTurnSeries& data,
                                 const Matrix& covs, std::uint64_t seed);

std::pair<std::vector<int>, StepTurnSeries> simulate_hmm(const HmmSpec& spec, Index t_len,
                                                         const Matrix& covs, Rng& rng);

struct SelectionCandidate {
    std::string name;
    double aic = 0.0;
};
struct SelectionStep {
    std::string accepted;
    double aic_before = 0.0;
    double aic_after = 0.0;
    double delta_aic = 0.0;  // aic_before - aic_after, positive = improvement
    std::vector<SelectionCandidate> candidates;
};
struct SelectionReport {
    std::vector<SelectionStep> steps;  // accepted inclusions, in order
    std::vector<std::string> selected;
    double base_aic = 0.0;
    double final_aic = 0.0;
    FittedHmm final_fit;
};

// Greedy forward selection on AIC; stops when no candidate lowers it.
SelectionReport select_covariates_forward(const HmmSpec& base,
                                          const std::vector<std::string>& candidates,
                                          const HmmDataset& data,
                                          const HmmFitOptions& opts = {});

}  // namespace movestat
