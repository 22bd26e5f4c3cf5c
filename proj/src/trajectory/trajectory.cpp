#include "movestat/trajectory/trajectory.hpp"

#include "movestat/core/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace movestat {

void Trajectory::validate() const {
    const auto t = static_cast<std::size_t>(size());
    if (static_cast<std::size_t>(positions.rows()) != t || missing.size() != t) {
        throw InvalidInput("Trajectory: positions/mask length mismatch");
    }
    if (positions.cols() != 2) throw InvalidInput("Trajectory: positions must be T x 2");
    if (covariates.size() > 0 && static_cast<std::size_t>(covariates.rows()) != t) {
        throw InvalidInput("Trajectory: covariate length mismatch");
    }
    if (static_cast<std::size_t>(covariates.cols()) != covariate_names.size()) {
        throw InvalidInput("Trajectory: covariate name/column mismatch");
    }
    for (std::size_t i = 1; i < t; ++i) {
        if (!(times[i] > times[i - 1])) {
            throw InvalidInput("Trajectory: times not strictly increasing at row " +
                               std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < t; ++i) {
        if (!missing[i] && (!std::isfinite(positions(i, 0)) || !std::isfinite(positions(i, 1)))) {
            throw InvalidInput("Trajectory: NaN in unmasked position at row " + std::to_string(i));
        }
    }
}

void StepTurnSeries::validate() const {
    const auto n = static_cast<std::size_t>(size());
    if (static_cast<std::size_t>(turns.size()) != n || step_valid.size() != n ||
        turn_valid.size() != n) {
        throw InvalidInput("StepTurnSeries: length mismatch");
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (step_valid[k] && !(steps[k] >= 0.0)) {
            throw InvalidInput("StepTurnSeries: negative step at " + std::to_string(k));
        }
        if (turn_valid[k] && !(turns[k] > -kPi && turns[k] <= kPi)) {
            throw InvalidInput("StepTurnSeries: turn outside (-pi, pi] at " + std::to_string(k));
        }
    }
}

std::vector<Trajectory> parse_trajectories(const std::string& csv_text,
                                           const TrajectorySchema& schema) {
    const CsvTable table = parse_csv(csv_text);
    const int ci = table.column_index(schema.id);
    const int ct = table.column_index(schema.time);
    const int cx = table.column_index(schema.x);
    const int cy = table.column_index(schema.y);
    for (const auto& [name, idx] : {std::pair{schema.id, ci}, {schema.time, ct},
                                    {schema.x, cx}, {schema.y, cy}}) {
        if (idx < 0) throw MissingColumnError("required column '" + name + "' not found");
    }

    std::vector<int> cov_cols;
    std::vector<std::string> cov_names;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        const int idx = static_cast<int>(j);
        if (idx == ci || idx == ct || idx == cx || idx == cy) continue;
        cov_cols.push_back(idx);
        cov_names.push_back(table.columns[j]);
    }

    struct Row {
        double time;
        std::optional<double> x, y;
        std::vector<double> covs;
        std::size_t line;
    };
    std::vector<std::string> id_order;
    std::map<std::string, std::vector<Row>> by_id;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::string& id = cells[ci];
        auto time = cell_as_double(cells[ct], r, schema.time);
        if (!time) throw CsvParseError("row " + std::to_string(r + 1) + ": missing time value");
        Row row;
        row.time = *time;
        row.x = cell_as_double(cells[cx], r, schema.x);
        row.y = cell_as_double(cells[cy], r, schema.y);
        row.line = r;
        for (std::size_t j = 0; j < cov_cols.size(); ++j) {
            auto v = cell_as_double(cells[cov_cols[j]], r, cov_names[j]);
            row.covs.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
        }
        if (by_id.find(id) == by_id.end()) id_order.push_back(id);
        by_id[id].push_back(std::move(row));
    }

    std::vector<Trajectory> out;
    for (const auto& id : id_order) {
        auto rows = by_id[id];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.time < b.time; });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].time == rows[i - 1].time) {
                throw DuplicateTimeError("id '" + id + "': duplicate timestamp " +
                                         format_double(rows[i].time) + " (rows " +
                                         std::to_string(rows[i - 1].line + 1) + ", " +
                                         std::to_string(rows[i].line + 1) + ")");
            }
        }
        Trajectory traj;
        traj.id = id;
        const auto n = static_cast<Index>(rows.size());
        traj.positions.resize(n, 2);
        traj.covariate_names = cov_names;
        traj.covariates.resize(n, static_cast<Index>(cov_names.size()));
        traj.missing.resize(rows.size());
        for (Index i = 0; i < n; ++i) {
            const Row& row = rows[static_cast<std::size_t>(i)];
            traj.times.push_back(row.time);
            const bool have = row.x.has_value() && row.y.has_value();
            traj.missing[static_cast<std::size_t>(i)] = !have;
            traj.positions(i, 0) = have ? *row.x : std::numeric_limits<double>::quiet_NaN();
            traj.positions(i, 1) = have ? *row.y : std::numeric_limits<double>::quiet_NaN();
            for (std::size_t j = 0; j < cov_names.size(); ++j) {
                traj.covariates(i, static_cast<Index>(j)) = row.covs[j];
            }
        }
        traj.validate();
        out.push_back(std::move(traj));
    }
    return out;
}

std::vector<Trajectory> load_trajectories(const std::string& path,
                                          const TrajectorySchema& schema) {
    std::ifstream in(path);
    if (!in) throw CsvParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trajectories(buf.str(), schema);
}

StepTurnSeries derive_steps_turns(const Trajectory& traj) {
    const Index t = traj.size();
    if (t < 2) throw InvalidInput("derive_steps_turns: need at least 2 positions");
    const Index n = t - 1;
    StepTurnSeries s;
    s.steps = Vector::Zero(n);
    s.turns = Vector::Zero(n);
    s.step_valid.assign(static_cast<std::size_t>(n), false);
    s.turn_valid.assign(static_cast<std::size_t>(n), false);

    std::vector<double> heading(static_cast<std::size_t>(n), 0.0);
    std::vector<bool> heading_ok(static_cast<std::size_t>(n), false);
    for (Index k = 0; k < n; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (traj.missing[ku] || traj.missing[ku + 1]) continue;
        const double dx = traj.positions(k + 1, 0) - traj.positions(k, 0);
        const double dy = traj.positions(k + 1, 1) - traj.positions(k, 1);
        s.steps[k] = std::hypot(dx, dy);
        s.step_valid[ku] = true;
        if (s.steps[k] > 0.0) {
            heading[ku] = std::atan2(dy, dx);
            heading_ok[ku] = true;
        }
    }
    for (Index k = 1; k < n; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        // a turn needs two consecutive well-defined headings
        if (heading_ok[ku] && heading_ok[ku - 1]) {
            s.turns[k] = wrap_angle(heading[ku] - heading[ku - 1]);
            s.turn_valid[ku] = true;
        }
    }
    return s;
}

Matrix reconstruct_positions(const Vec2& start, double initial_heading,
                             const StepTurnSeries& series) {
    const Index n = series.size();
    Matrix pos(n + 1, 2);
    pos.row(0) = start.transpose();
    double heading = initial_heading;
    for (Index k = 0; k < n; ++k) {
        if (!series.step_valid[static_cast<std::size_t>(k)]) {
            throw InvalidInput("reconstruct_positions: invalid step at " + std::to_string(k));
        }
        if (k > 0 && series.turn_valid[static_cast<std::size_t>(k)]) {
            heading += series.turns[k];
        }
        pos(k + 1, 0) = pos(k, 0) + series.steps[k] * std::cos(heading);
        pos(k + 1, 1) = pos(k, 1) + series.steps[k] * std::sin(heading);
    }
    return pos;
}

Trajectory interpolate_to_grid(const Trajectory& traj, double dt) {
    if (!(dt > 0.0)) throw InvalidInput("interpolate_to_grid: dt must be positive");
    std::vector<Index> obs;
    for (Index i = 0; i < traj.size(); ++i) {
        if (!traj.missing[static_cast<std::size_t>(i)]) obs.push_back(i);
    }
    if (obs.size() < 2) throw InvalidInput("interpolate_to_grid: need at least 2 observed positions");

    const double t0 = traj.times.front();
    const double t_end = traj.times.back();
    const double first_obs = traj.times[static_cast<std::size_t>(obs.front())];
    const double last_obs = traj.times[static_cast<std::size_t>(obs.back())];

    Trajectory out;
    out.id = traj.id;
    out.covariate_names = traj.covariate_names;
    std::vector<double> grid;
    for (double t = t0; t <= t_end + 1e-12 * std::max(1.0, std::abs(t_end)); t += dt) {
        grid.push_back(t);
    }
    const auto n = static_cast<Index>(grid.size());
    out.times = grid;
    out.positions.resize(n, 2);
    out.missing.assign(grid.size(), true);
    out.covariates.resize(n, traj.covariates.cols());

    std::size_t seg = 0;  // index into obs: current left knot
    for (Index i = 0; i < n; ++i) {
        const double t = grid[static_cast<std::size_t>(i)];
        out.positions(i, 0) = std::numeric_limits<double>::quiet_NaN();
        out.positions(i, 1) = std::numeric_limits<double>::quiet_NaN();
        if (t >= first_obs - 1e-12 && t <= last_obs + 1e-12) {
            while (seg + 1 < obs.size() &&
                   traj.times[static_cast<std::size_t>(obs[seg + 1])] < t) {
                ++seg;
            }
            const Index a = obs[seg];
            const Index b = obs[std::min(seg + 1, obs.size() - 1)];
            const double ta = traj.times[static_cast<std::size_t>(a)];
            const double tb = traj.times[static_cast<std::size_t>(b)];
            const double w = (tb > ta) ? std::clamp((t - ta) / (tb - ta), 0.0, 1.0) : 0.0;
            out.positions.row(i) = (1.0 - w) * traj.positions.row(a) + w * traj.positions.row(b);
            out.missing[static_cast<std::size_t>(i)] = false;
        }
        // covariates by nearest observation time
        if (traj.covariates.cols() > 0) {
            std::size_t best = 0;
            double bestd = std::abs(traj.times[0] - t);
            for (std::size_t r = 1; r < traj.times.size(); ++r) {
                const double dist = std::abs(traj.times[r] - t);
                if (dist < bestd) {
                    bestd = dist;
                    best = r;
                }
            }
            out.covariates.row(i) = traj.covariates.row(static_cast<Index>(best));
        }
    }
    out.validate();
    return out;
}

RegularityReport regularity_report(const Trajectory& traj, double rel_tol) {
    RegularityReport rep;
    rep.missing_count = static_cast<Index>(
        std::count(traj.missing.begin(), traj.missing.end(), true));
    if (traj.size() < 2) return rep;
    std::vector<double> gaps;
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        gaps.push_back(traj.times[i] - traj.times[i - 1]);
    }
    rep.n_gaps = static_cast<Index>(gaps.size());
    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    rep.median_dt = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    Index within = 0;
    for (double g : gaps) {
        if (std::abs(g - rep.median_dt) <= rel_tol * rep.median_dt) ++within;
    }
    rep.regular_fraction = static_cast<double>(within) / static_cast<double>(gaps.size());
    return rep;
}

}  // namespace movestat
