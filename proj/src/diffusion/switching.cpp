#include "movestat/diffusion/switching.hpp"

#include <cmath>
#include <limits>

namespace movestat {

namespace {

Index model_dim(const StateMovementModel& m) {
    if (const auto* bm = std::get_if<BrownianSpec>(&m)) return bm->dim();
    return std::get<OuParams>(m).dim();
}

Vector propagate(const StateMovementModel& m, const Vector& x, double duration, Rng& rng) {
    if (duration <= 0.0) return x;
    if (const auto* bm = std::get_if<BrownianSpec>(&m)) {
        Eigen::LLT<Matrix> llt(bm->cov * duration);
        std::normal_distribution<double> noise(0.0, 1.0);
        Vector z(x.size());
        for (Index i = 0; i < z.size(); ++i) z[i] = noise(rng);
        return x + Matrix(llt.matrixL()) * z;
    }
    const auto& ou = std::get<OuParams>(m);
    const GaussianState g = ou_conditional(ou, x, duration);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.cov);
    std::normal_distribution<double> noise(0.0, 1.0);
    Vector z(x.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = noise(rng);
    return g.mean + es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z;
}

}  // namespace

void SwitchingPath::validate() const {
    if (events.size() < 2) throw InvalidInput("SwitchingPath: need initial and terminal records");
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (!(events[i].time > events[i - 1].time)) {
            throw InvalidInput("SwitchingPath: event times not strictly increasing");
        }
        const bool terminal = (i + 1 == events.size());
        if (!terminal && events[i].state == events[i - 1].state) {
            throw InvalidInput("SwitchingPath: consecutive events share a state");
        }
    }
}

SwitchingPath simulate_switching_diffusion(const GeneratorMatrix& gen,
                                           const std::vector<StateMovementModel>& models,
                                           const Vector& x0, int s0, double t0, double t_end,
                                           Rng& rng) {
    const int n = gen.n_states();
    if (static_cast<int>(models.size()) != n) {
        throw InvalidInput("simulate_switching_diffusion: one movement model per state required");
    }
    for (const auto& m : models) {
        if (model_dim(m) != x0.size()) {
            throw InvalidInput("simulate_switching_diffusion: movement model dim mismatch");
        }
    }
    if (s0 < 1 || s0 > n) throw InvalidInput("simulate_switching_diffusion: s0 out of range");
    if (!(t_end > t0)) throw InvalidInput("simulate_switching_diffusion: need T > t0");

    const CtmcViews views = ctmc_views(gen);
    SwitchingPath path;
    double t = t0;
    int s = s0 - 1;
    Vector x = x0;
    path.events.push_back({t, s + 1, x});

    auto draw_holding = [&](int state) {
        const double rate = views.rates[state];
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();  // absorbing
        std::exponential_distribution<double> expo(rate);
        return expo(rng);
    };
    auto draw_next_state = [&](int state) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(rng);
        double acc = 0.0;
        int last = state == n - 1 ? n - 2 : n - 1;
        for (int j = 0; j < n; ++j) {
            if (j == state) continue;
            acc += views.jump(state, j);
            if (u <= acc) return j;
            if (views.jump(state, j) > 0.0) last = j;
        }
        return last;
    };

    double holding = draw_holding(s);
    while (t + holding < t_end) {
        x = propagate(models[static_cast<std::size_t>(s)], x, holding, rng);
        const int next = draw_next_state(s);
        t += holding;
        s = next;
        path.events.push_back({t, s + 1, x});
        holding = draw_holding(s);
    }
    x = propagate(models[static_cast<std::size_t>(s)], x, t_end - t, rng);
    path.events.push_back({t_end, s + 1, x});
    path.validate();
    return path;
}

Vector occupancy_fractions(const SwitchingPath& path, int n_states) {
    path.validate();
    Vector occ = Vector::Zero(n_states);
    for (std::size_t i = 0; i + 1 < path.events.size(); ++i) {
        const int s = path.events[i].state - 1;
        if (s < 0 || s >= n_states) throw InvalidInput("occupancy_fractions: state out of range");
        occ[s] += path.events[i + 1].time - path.events[i].time;
    }
    return occ / (path.events.back().time - path.events.front().time);
}

CtmcSufficientStats switching_path_stats(const SwitchingPath& path, int n_states) {
    path.validate();
    CtmcSufficientStats stats;
    stats.holding_times = Vector::Zero(n_states);
    stats.transition_counts = Eigen::MatrixXi::Zero(n_states, n_states);
    for (std::size_t i = 0; i + 1 < path.events.size(); ++i) {
        const int s = path.events[i].state - 1;
        stats.holding_times[s] += path.events[i + 1].time - path.events[i].time;
        const bool terminal = (i + 2 == path.events.size());
        if (!terminal) {
            stats.transition_counts(s, path.events[i + 1].state - 1) += 1;
        }
    }
    return stats;
}

Matrix switching_path_infill(const SwitchingPath& path,
                             const std::vector<StateMovementModel>& models,
                             const std::vector<double>& times, Rng& rng) {
    path.validate();
    const Index d = path.events.front().location.size();
    Matrix out(static_cast<Index>(times.size()), d);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::size_t seg = 0;
    double cur_t = path.events.front().time;
    Vector cur_x = path.events.front().location;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (i > 0 && !(t >= times[i - 1])) {
            throw InvalidInput("switching_path_infill: times must be ascending");
        }
        if (t < path.events.front().time || t > path.events.back().time) {
            throw InvalidInput("switching_path_infill: time outside the path span");
        }
        while (seg + 2 < path.events.size() && path.events[seg + 1].time < t) {
            ++seg;
            cur_t = path.events[seg].time;
            cur_x = path.events[seg].location;
        }
        const auto& left = path.events[seg];
        const auto& right = path.events[seg + 1];
        if (cur_t < left.time) {
            cur_t = left.time;
            cur_x = left.location;
        }
        const auto& model = models[static_cast<std::size_t>(left.state - 1)];
        Vector draw(d);
        if (const auto* bm = std::get_if<BrownianSpec>(&model)) {
            const double sigma2 = bm->cov(0, 0);
            if (!bm->cov.isApprox(sigma2 * Matrix::Identity(d, d), 1e-12)) {
                throw InvalidInput("switching_path_infill: Brownian infill requires isotropic cov");
            }
            const BridgeMoments m =
                brownian_bridge_marginal(cur_x, right.location, cur_t, right.time, sigma2, t);
            const double sd = std::sqrt(std::max(m.variance, 0.0));
            for (Index k = 0; k < d; ++k) draw[k] = m.mean[k] + sd * noise(rng);
        } else {
            const auto& ou = std::get<OuParams>(model);
            const GaussianState g =
                ou_bridge_marginal(ou, cur_x, right.location, cur_t, right.time, t);
            Eigen::SelfAdjointEigenSolver<Matrix> es(g.cov);
            Vector z(d);
            for (Index k = 0; k < d; ++k) z[k] = noise(rng);
            draw = g.mean +
                   es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z;
        }
        cur_t = t;
        cur_x = draw;
        out.row(static_cast<Index>(i)) = draw.transpose();
    }
    return out;
}

}  // namespace movestat
