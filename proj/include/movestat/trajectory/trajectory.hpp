#pragma once

#include "movestat/core/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace movestat {

// Timestamped planar positions with optional covariate columns. Immutable by
// convention after construction; validate() enforces the invariants.
struct Trajectory {
    std::string id;
    std::vector<double> times;                        // strictly increasing
    Matrix positions;                                 // T x 2
    std::vector<bool> missing;                        // per-row position mask
    std::vector<std::string> covariate_names;
    Matrix covariates;                                // T x p (p may be 0)

    Index size() const { return static_cast<Index>(times.size()); }
    void validate() const;
};

// Derived step lengths and turning angles. Entry k covers the move from
// position k to k+1; turn k compares headings of moves k-1 and k, so the
// first turn is always flagged invalid.
struct StepTurnSeries {
    Vector steps;
    Vector turns;  // in (-pi, pi] where valid
    std::vector<bool> step_valid;
    std::vector<bool> turn_valid;

    Index size() const { return steps.size(); }
    void validate() const;
};

struct TrajectorySchema {
    std::string id = "id";
    std::string time = "time";
    std::string x = "x";
    std::string y = "y";
};

class MissingColumnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DuplicateTimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Load one trajectory per distinct id from a CSV file. Rows are sorted by
// time within each id; exact duplicate timestamps are rejected. Extra numeric
// columns become covariates; empty x/y cells mark a missing position.
std::vector<Trajectory> load_trajectories(const std::string& path,
                                          const TrajectorySchema& schema = {});
std::vector<Trajectory> parse_trajectories(const std::string& csv_text,
                                           const TrajectorySchema& schema = {});

StepTurnSeries derive_steps_turns(const Trajectory& traj);

// Rebuild positions from an initial position/heading plus steps and turns.
// Requires a fully valid series; used as the inverse of derive_steps_turns.
Matrix reconstruct_positions(const Vec2& start, double initial_heading,
                             const StepTurnSeries& series);

Trajectory interpolate_to_grid(const Trajectory& traj, double dt);

struct RegularityReport {
    double median_dt = 0.0;
    double regular_fraction = 1.0;  // gaps within rel_tol of the median
    Index n_gaps = 0;
    Index missing_count = 0;
};

RegularityReport regularity_report(const Trajectory& traj, double rel_tol = 0.05);

}  // namespace movestat
