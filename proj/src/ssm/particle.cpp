#include "movestat/ssm/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace movestat {

void GenericSsmSpec::validate() const {
    if (state_dim < 1) throw InvalidInput("GenericSsmSpec: state_dim must be >= 1");
    if (!sample_initial || !sample_transition || !obs_log_density) {
        throw InvalidInput("GenericSsmSpec: all three model callbacks are required");
    }
}

namespace {

std::vector<int> resample_indices(const Vector& weights, int n, Rng& rng,
                                  ResamplingScheme scheme) {
    Vector cum(weights.size());
    double acc = 0.0;
    for (Index i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cum[i] = acc;
    }
    cum[weights.size() - 1] = 1.0;
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (scheme == ResamplingScheme::Multinomial) {
        for (int k = 0; k < n; ++k) {
            const double u = unif(rng);
            idx[static_cast<std::size_t>(k)] = static_cast<int>(
                std::lower_bound(cum.data(), cum.data() + cum.size(), u) - cum.data());
        }
    } else {
        const double u0 = unif(rng) / n;
        Index j = 0;
        for (int k = 0; k < n; ++k) {
            const double u = u0 + static_cast<double>(k) / n;
            while (j < cum.size() - 1 && cum[j] < u) ++j;
            idx[static_cast<std::size_t>(k)] = static_cast<int>(j);
        }
    }
    return idx;
}

}  // namespace

ParticleFilterResult bootstrap_particle_filter(const GenericSsmSpec& spec, const Matrix& obs,
                                               const std::vector<bool>& missing,
                                               int n_particles, std::uint64_t seed,
                                               ResamplingScheme scheme) {
    spec.validate();
    if (n_particles < 2) throw InvalidInput("bootstrap_particle_filter: need >= 2 particles");
    const Index t_len = obs.rows();
    if (t_len == 0) throw InvalidInput("bootstrap_particle_filter: no observations");
    if (!missing.empty() && missing.size() != static_cast<std::size_t>(t_len)) {
        throw InvalidInput("bootstrap_particle_filter: missing mask length mismatch");
    }
    auto is_missing = [&](Index t) {
        return !missing.empty() && missing[static_cast<std::size_t>(t)];
    };

    ParticleFilterResult res;
    Matrix particles(n_particles, spec.state_dim);
    for (int i = 0; i < n_particles; ++i) {
        Rng rng = substream(seed, 0, static_cast<std::uint64_t>(i));
        particles.row(i) = spec.sample_initial(rng).transpose();
    }

    Vector logw(n_particles);
    for (Index t = 0; t < t_len; ++t) {
        if (t > 0) {
            for (int i = 0; i < n_particles; ++i) {
                Rng rng = substream(seed, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(i));
                particles.row(i) =
                    spec.sample_transition(particles.row(i).transpose(), t, rng).transpose();
            }
        }
        ParticleSet set;
        set.states = particles;
        if (is_missing(t)) {
            set.weights = Vector::Constant(n_particles, 1.0 / n_particles);
            set.ess = n_particles;
            set.log_evidence_increment = 0.0;
            res.history.push_back(std::move(set));
            continue;  // nothing to weight or resample against
        }
        const Vector y = obs.row(t).transpose();
        for (int i = 0; i < n_particles; ++i) {
            logw[i] = spec.obs_log_density(t, y, particles.row(i).transpose());
        }
        const double shift = logw.maxCoeff();
        if (!std::isfinite(shift)) {
            throw ParticleDegeneracyError(
                t, "particle filter: all weights vanished at step " + std::to_string(t));
        }
        Vector w = (logw.array() - shift).exp();
        const double total = w.sum();
        set.log_evidence_increment = shift + std::log(total / n_particles);
        w /= total;
        set.weights = w;
        set.ess = 1.0 / w.squaredNorm();
        res.log_evidence += set.log_evidence_increment;

        Rng rng = substream(seed, static_cast<std::uint64_t>(t),
                            static_cast<std::uint64_t>(n_particles) + 7);
        const auto idx = resample_indices(w, n_particles, rng, scheme);
        Matrix resampled(n_particles, spec.state_dim);
        for (int i = 0; i < n_particles; ++i) resampled.row(i) = particles.row(idx[i]);
        particles = std::move(resampled);
        res.history.push_back(std::move(set));
    }
    return res;
}

Matrix discrete_coordinate_probabilities(const ParticleFilterResult& result, Index coord,
                                         int n_values) {
    const auto t_len = static_cast<Index>(result.history.size());
    Matrix probs = Matrix::Zero(t_len, n_values);
    for (Index t = 0; t < t_len; ++t) {
        const auto& set = result.history[static_cast<std::size_t>(t)];
        for (Index i = 0; i < set.states.rows(); ++i) {
            const int v = static_cast<int>(std::lround(set.states(i, coord)));
            if (v >= 0 && v < n_values) probs(t, v) += set.weights[i];
        }
    }
    return probs;
}

}  // namespace movestat
