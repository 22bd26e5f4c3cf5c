#pragma once

#include "movestat/core/rng.hpp"
#include "movestat/core/types.hpp"

#include <functional>
#include <vector>

namespace movestat {

// Simulation-defined state space model: all the bootstrap filter needs is a
// process sampler and the observation log density. A discrete behaviour
// component can ride along as a coordinate of the state vector.
struct GenericSsmSpec {
    Index state_dim = 0;
    std::function<Vector(Rng&)> sample_initial;
    std::function<Vector(const Vector& state, Index t, Rng&)> sample_transition;
    std::function<double(Index t, const Vector& obs, const Vector& state)> obs_log_density;

    void validate() const;
};

class ParticleDegeneracyError : public std::runtime_error {
public:
    ParticleDegeneracyError(Index step, const std::string& msg)
        : std::runtime_error(msg), step(step) {}
    Index step;
};

// Weighted particle cloud after propagation and weighting at one step,
// recorded before resampling.
struct ParticleSet {
    Matrix states;   // n x state_dim
    Vector weights;  // normalized
    double ess = 0.0;
    double log_evidence_increment = 0.0;
};

enum class ResamplingScheme { Multinomial, Systematic };

struct ParticleFilterResult {
    std::vector<ParticleSet> history;
    double log_evidence = 0.0;
};

// Bootstrap filter: propagate with the process sampler, weight with the
// observation density, resample every step. Particle propagation draws from
// a substream keyed by (seed, step, particle index), so results do not depend
// on evaluation order.
ParticleFilterResult bootstrap_particle_filter(
    const GenericSsmSpec& spec, const Matrix& obs, const std::vector<bool>& missing,
    int n_particles, std::uint64_t seed,
    ResamplingScheme scheme = ResamplingScheme::Multinomial);

// Probability mass of particles whose coordinate `coord` rounds to each of
// the values 0..n_values-1; convenience for discrete behaviour components.
Matrix discrete_coordinate_probabilities(const ParticleFilterResult& result, Index coord,
                                         int n_values);

}  // namespace movestat
