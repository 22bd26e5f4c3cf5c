#pragma once

#include "movestat/core/rng.hpp"
#include "movestat/diffusion/brownian.hpp"
#include "movestat/diffusion/ctmc.hpp"
#include "movestat/diffusion/ou.hpp"

#include <variant>
#include <vector>

namespace movestat {

// Movement model attached to one behaviour state of a switching diffusion.
using StateMovementModel = std::variant<BrownianSpec, OuParams>;

// Piecewise diffusion path: one event per behaviour switch, recorded as
// (time, state entered, location at that time), starting with the initial
// condition and closed by a terminal record at T (same state as the last
// event, so only the terminal record repeats a state).
struct SwitchingPath {
    struct Event {
        double time;
        int state;  // 1-based
        Vector location;
    };
    std::vector<Event> events;

    void validate() const;
};

SwitchingPath simulate_switching_diffusion(const GeneratorMatrix& gen,
                                           const std::vector<StateMovementModel>& models,
                                           const Vector& x0, int s0, double t0, double t_end,
                                           Rng& rng);

// Fraction of [t0, T] spent in each state.
Vector occupancy_fractions(const SwitchingPath& path, int n_states);

CtmcSufficientStats switching_path_stats(const SwitchingPath& path, int n_states);

// Locations at user times; inside each constant-state segment the position is
// filled in by the corresponding conditioned diffusion (Brownian bridge or
// pinned OU).
Matrix switching_path_infill(const SwitchingPath& path,
                             const std::vector<StateMovementModel>& models,
                             const std::vector<double>& times, Rng& rng);

}  // namespace movestat
