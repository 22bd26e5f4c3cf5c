// movestat command line: fit, decode, filter, simulate and export plot-ready
// CSV/JSON artifacts for the trajectory model library.

#include "movestat/core/csv.hpp"
#include "movestat/io/serialize.hpp"
#include "movestat/ssm/particle.hpp"
#include "movestat/diffusion/sde.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace movestat;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct RunContext {
    fs::path out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;
    std::map<std::string, double> tol_overrides;
    Json config;  // canonical record of the invocation

    void prepare_output() {
        if (const char* env = std::getenv("MOVESTAT_OUT_DIR")) {
            if (*env) out_dir = env;  // environment override wins
        }
        if (out_dir.empty()) out_dir = ".";
        fs::create_directories(out_dir);
    }

    fs::path artifact(const std::string& name) const { return out_dir / name; }

    void write_sidecar(const fs::path& file) const {
        Json meta;
        meta["version"] = kVersion;
        meta["seed"] = seed;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(config.dump())));
        meta["config_hash"] = buf;
        std::ofstream out(file.string() + ".meta.json", std::ios::binary);
        out << meta.dump(2) << "\n";
    }

    void write_json(const fs::path& file, const Json& j) const {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + file.string());
        out << j.dump(2) << "\n";
        write_sidecar(file);
    }
};

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open spec file: " + path);
    Json j;
    in >> j;
    return j;
}

HmmDataset load_dataset(const std::string& input) {
    const auto trajectories = load_trajectories(input);
    HmmDataset data;
    for (const auto& traj : trajectories) data.push_back(make_track(traj));
    return data;
}

OptimOptions optim_from_overrides(const std::map<std::string, double>& tol) {
    OptimOptions opt;
    if (auto it = tol.find("grad_tol"); it != tol.end()) opt.grad_tol = it->second;
    if (auto it = tol.find("f_tol"); it != tol.end()) opt.f_tol = it->second;
    if (auto it = tol.find("max_iterations"); it != tol.end()) {
        opt.max_iterations = static_cast<int>(it->second);
    }
    return opt;
}

std::vector<bool> missing_mask(const Trajectory& traj) { return traj.missing; }

int cmd_fit_hmm(RunContext& ctx, const std::string& input, const std::string& spec_path,
                int restarts) {
    const HmmSpec spec = hmm_spec_from_json(load_json(spec_path));
    const HmmDataset data = load_dataset(input);

    HmmFitOptions opts;
    opts.seed = ctx.seed;
    opts.workers = ctx.workers;
    opts.restarts = restarts;
    opts.optim = optim_from_overrides(ctx.tol_overrides);
    const FittedHmm fit = fit_mle(spec, data, opts);

    ctx.write_json(ctx.artifact("fit.json"), fitted_hmm_to_json(fit));
    {
        std::string states_csv = "track,t,state\n";
        std::string probs_csv = "track,t";
        for (int j = 0; j < fit.spec.n_states(); ++j) probs_csv += ",p" + std::to_string(j + 1);
        probs_csv += "\n";
        std::string res_csv = "track,t,step_residual,turn_residual\n";
        Index n_res = 0, n_outlier = 0;
        for (const auto& track : data) {
            const auto path = viterbi(fit, track);
            const Matrix probs = state_probabilities(fit, track);
            const auto& names = fit.spec.transition.covariate_names;
            const PseudoResiduals res = pseudo_residuals(
                fit.spec, track.series,
                names.empty() ? Matrix() : select_covariates(track, names), ctx.seed);
            for (std::size_t t = 0; t < path.size(); ++t) {
                states_csv += track.id + "," + std::to_string(t) + "," +
                              std::to_string(path[t]) + "\n";
            }
            for (Index t = 0; t < probs.rows(); ++t) {
                probs_csv += track.id + "," + std::to_string(t);
                for (Index j = 0; j < probs.cols(); ++j) {
                    probs_csv += "," + format_double(probs(t, j));
                }
                probs_csv += "\n";
            }
            for (Index t = 0; t < res.step.size(); ++t) {
                res_csv += track.id + "," + std::to_string(t) + ",";
                if (res.step_valid[static_cast<std::size_t>(t)]) {
                    res_csv += format_double(res.step[t]);
                    ++n_res;
                    if (std::abs(res.step[t]) > 3.5) ++n_outlier;
                }
                res_csv += ",";
                if (res.turn_valid[static_cast<std::size_t>(t)]) {
                    res_csv += format_double(res.turn[t]);
                }
                res_csv += "\n";
            }
        }
        for (const auto& [name, text] :
             {std::pair<std::string, const std::string&>{"states.csv", states_csv},
              {"smoothed_probs.csv", probs_csv},
              {"residuals.csv", res_csv}}) {
            std::ofstream out(ctx.artifact(name), std::ios::binary);
            out << text;
            ctx.write_sidecar(ctx.artifact(name));
        }
        // residual summary: under a correct model ~0.05% of |residuals|
        // should exceed 3.5
        Json summary;
        summary["n_step_residuals"] = n_res;
        summary["step_outliers_gt_3.5"] = n_outlier;
        const double expected = 2.0 * (1.0 - 0.9997673709209645) * static_cast<double>(n_res);
        summary["expected_outliers"] = expected;
        summary["misfit_flag"] = n_outlier > std::max(3.0, 4.0 * expected);
        ctx.write_json(ctx.artifact("residual_summary.json"), summary);
    }
    if (!fit.report.converged) {
        std::cerr << "fit-hmm: optimizer did not converge (grad norm " << fit.report.grad_norm
                  << ")\n";
        return 2;
    }
    return 0;
}

int cmd_select_covariates(RunContext& ctx, const std::string& input,
                          const std::string& spec_path,
                          std::vector<std::string> candidates, int restarts) {
    const HmmSpec spec = hmm_spec_from_json(load_json(spec_path));
    const HmmDataset data = load_dataset(input);
    if (candidates.empty() && !data.empty()) {
        candidates = data.front().covariate_names;  // default: every extra column
    }
    HmmFitOptions opts;
    opts.seed = ctx.seed;
    opts.workers = ctx.workers;
    opts.restarts = restarts;
    opts.optim = optim_from_overrides(ctx.tol_overrides);
    const SelectionReport report = select_covariates_forward(spec, candidates, data, opts);

    Json j;
    j["base_aic"] = report.base_aic;
    j["final_aic"] = report.final_aic;
    j["selected"] = report.selected;
    Json steps = Json::array();
    for (const auto& s : report.steps) {
        Json step;
        step["accepted"] = s.accepted;
        step["aic_before"] = s.aic_before;
        step["aic_after"] = s.aic_after;
        step["delta_aic"] = s.delta_aic;
        Json cands = Json::array();
        for (const auto& c : s.candidates) cands.push_back({{"name", c.name}, {"aic", c.aic}});
        step["candidates"] = cands;
        steps.push_back(step);
    }
    j["steps"] = steps;
    j["final_fit"] = fitted_hmm_to_json(report.final_fit);
    ctx.write_json(ctx.artifact("selection.json"), j);
    return report.final_fit.report.converged ? 0 : 2;
}

int cmd_filter(RunContext& ctx, const std::string& backend, const std::string& input,
               const std::string& spec_path, int particles, int iterations, int burnin,
               bool laplace_fit) {
    const auto trajectories = load_trajectories(input);
    if (trajectories.empty()) throw InvalidInput("filter: no trajectories in input");
    const Trajectory& traj = trajectories.front();
    const Matrix obs = traj.positions;
    const std::vector<bool> missing = missing_mask(traj);
    const Json spec_json = load_json(spec_path);

    if (backend == "kalman") {
        const LinearGaussianSsmSpec spec = lg_ssm_from_json(spec_json);
        const KalmanResult kf = kalman_filter(spec, obs, missing);
        const SmootherResult sm = kalman_smoother(spec, kf);
        write_filter_csv(ctx.artifact("filtered.csv"), kf.filtered_mean, kf.filtered_cov,
                         kf.loglik_increments);
        ctx.write_sidecar(ctx.artifact("filtered.csv"));
        write_filter_csv(ctx.artifact("smoothed.csv"), sm.mean, sm.cov,
                         Vector::Zero(static_cast<Index>(sm.mean.size())));
        ctx.write_sidecar(ctx.artifact("smoothed.csv"));
        ctx.write_json(ctx.artifact("loglik.json"),
                       Json{{"backend", "kalman"}, {"log_likelihood", kf.log_likelihood}});
        return 0;
    }
    if (backend == "laplace") {
        HeavyTailSsmSpec spec = heavy_tail_ssm_from_json(spec_json);
        Json j;
        j["backend"] = "laplace";
        int code = 0;
        if (laplace_fit) {
            Vector init(spec.obs_error.kind == ObsErrorModel::Kind::StudentT ? 3 : 2);
            init[0] = 0.5 * std::log(spec.core.process_cov(0, 0));
            init[1] = std::log(spec.obs_error.scale);
            if (init.size() == 3) init[2] = std::log(spec.obs_error.df);
            const LaplaceFit fit = fit_laplace(spec, obs, missing, init,
                                               optim_from_overrides(ctx.tol_overrides));
            j["fit"] = {{"sigma_z", fit.sigma_z},
                        {"sigma_y", fit.sigma_y},
                        {"nu", fit.nu},
                        {"converged", fit.converged},
                        {"std_errors", vector_to_json(fit.std_errors)},
                        {"log_marginal", fit.log_marginal}};
            if (!fit.converged) code = 2;
            spec.core.process_cov = fit.sigma_z * fit.sigma_z *
                                    Matrix::Identity(spec.core.state_dim(), spec.core.state_dim());
            spec.obs_error.scale = fit.sigma_y;
            spec.obs_error.df = fit.nu;
        }
        const LaplaceResult res = laplace_marginal(spec, obs, missing);
        j["log_likelihood"] = res.log_marginal;
        j["newton_iterations"] = res.newton_iterations;
        std::vector<Vector> means;
        std::vector<Matrix> covs;
        for (Index t = 0; t < res.latent_mode.rows(); ++t) {
            means.push_back(res.latent_mode.row(t).transpose());
            covs.push_back(Matrix::Zero(res.latent_mode.cols(), res.latent_mode.cols()));
        }
        write_filter_csv(ctx.artifact("smoothed.csv"), means, covs,
                         Vector::Zero(res.latent_mode.rows()));
        ctx.write_sidecar(ctx.artifact("smoothed.csv"));
        ctx.write_json(ctx.artifact("loglik.json"), j);
        return code;
    }
    if (backend == "particle") {
        const LinearGaussianSsmSpec spec = lg_ssm_from_json(spec_json);
        const Index d = spec.state_dim();
        GenericSsmSpec gen;
        gen.state_dim = d;
        gen.sample_initial = [&spec, d](Rng& rng) {
            Eigen::LLT<Matrix> llt(spec.init_cov);
            std::normal_distribution<double> n01(0.0, 1.0);
            Vector z(d);
            for (Index i = 0; i < d; ++i) z[i] = n01(rng);
            return Vector(spec.init_mean + Matrix(llt.matrixL()) * z);
        };
        gen.sample_transition = [&spec, d](const Vector& x, Index, Rng& rng) {
            Eigen::LLT<Matrix> llt(spec.process_cov);
            std::normal_distribution<double> n01(0.0, 1.0);
            Vector z(d);
            for (Index i = 0; i < d; ++i) z[i] = n01(rng);
            return Vector(spec.transition * x + spec.offset + Matrix(llt.matrixL()) * z);
        };
        gen.obs_log_density = [&spec](Index, const Vector& y, const Vector& x) {
            const Vector r = y - spec.obs_matrix * x;
            Eigen::LLT<Matrix> llt(spec.obs_cov);
            const Vector w = llt.matrixL().solve(r);
            double logdet = 0.0;
            for (Index i = 0; i < spec.obs_cov.rows(); ++i) {
                logdet += std::log(llt.matrixL()(i, i));
            }
            return -0.5 * (r.size() * kLogTwoPi + w.squaredNorm()) - logdet;
        };
        const ParticleFilterResult res =
            bootstrap_particle_filter(gen, obs, missing, particles, ctx.seed);
        std::vector<Vector> means;
        std::vector<Matrix> covs;
        Vector incr(static_cast<Index>(res.history.size()));
        std::string ess_csv = "t,ess\n";
        for (std::size_t t = 0; t < res.history.size(); ++t) {
            const auto& set = res.history[t];
            const Vector m = set.states.transpose() * set.weights;
            means.push_back(m);
            Matrix c = Matrix::Zero(d, d);
            for (Index i = 0; i < set.states.rows(); ++i) {
                const Vector r = set.states.row(i).transpose() - m;
                c += set.weights[i] * r * r.transpose();
            }
            covs.push_back(c);
            incr[static_cast<Index>(t)] = set.log_evidence_increment;
            ess_csv += std::to_string(t) + "," + format_double(set.ess) + "\n";
        }
        write_filter_csv(ctx.artifact("filtered.csv"), means, covs, incr);
        ctx.write_sidecar(ctx.artifact("filtered.csv"));
        {
            std::ofstream out(ctx.artifact("ess.csv"), std::ios::binary);
            out << ess_csv;
            ctx.write_sidecar(ctx.artifact("ess.csv"));
        }
        ctx.write_json(ctx.artifact("loglik.json"),
                       Json{{"backend", "particle"},
                            {"n_particles", particles},
                            {"log_evidence", res.log_evidence}});
        return 0;
    }
    if (backend == "mcmc") {
        const SwitchingRandomWalkSpec spec = switching_rw_from_json(spec_json);
        McmcOptions opts;
        opts.iterations = iterations;
        opts.burn_in = burnin;
        opts.seed = ctx.seed;
        opts.update_theta = true;
        const McmcResult res = mcmc_ssm(spec, obs, missing, opts);
        write_chain_csv(ctx.artifact("chains.csv"), res.theta_names, res.theta_chain);
        ctx.write_sidecar(ctx.artifact("chains.csv"));
        std::vector<Vector> means;
        std::vector<Matrix> covs;
        for (Index t = 0; t < res.z_mean.rows(); ++t) {
            means.push_back(res.z_mean.row(t).transpose());
            covs.push_back(Matrix::Zero(spec.dim, spec.dim));
        }
        write_filter_csv(ctx.artifact("smoothed.csv"), means, covs,
                         Vector::Zero(res.z_mean.rows()));
        ctx.write_sidecar(ctx.artifact("smoothed.csv"));
        Json diag = Json::array();
        for (std::size_t p = 0; p < res.theta_diagnostics.size(); ++p) {
            diag.push_back({{"parameter", res.theta_names[p]},
                            {"ess", res.theta_diagnostics[p].ess},
                            {"rhat", res.theta_diagnostics[p].rhat}});
        }
        ctx.write_json(ctx.artifact("loglik.json"),
                       Json{{"backend", "mcmc"},
                            {"accept_rate_z", res.accept_rate_z},
                            {"accept_rate_theta", res.accept_rate_theta},
                            {"diagnostics", diag}});
        return 0;
    }
    throw InvalidInput("filter: unknown backend '" + backend + "'");
}

int cmd_simulate(RunContext& ctx, const std::string& model, const std::string& spec_path,
                 Index t_len, double t0, double t_end, double dt) {
    const Json spec_json = load_json(spec_path);
    Rng rng = make_rng(ctx.seed);

    auto grid = [&]() {
        std::vector<double> times;
        if (!(dt > 0.0)) throw InvalidInput("simulate: need --dt > 0");
        for (double t = t0; t <= t_end + 1e-12; t += dt) times.push_back(t);
        return times;
    };

    if (model == "hmm") {
        const HmmSpec spec = hmm_spec_from_json(spec_json);
        if (!spec.transition.homogeneous()) {
            throw InvalidInput("simulate hmm: covariate-linked specs need the library API");
        }
        auto [states, series] = simulate_hmm(spec, t_len, Matrix(), rng);
        write_step_turn_csv(ctx.artifact("series.csv").string(), series);
        ctx.write_sidecar(ctx.artifact("series.csv"));
        write_states_csv(ctx.artifact("states.csv").string(), "sim", states);
        ctx.write_sidecar(ctx.artifact("states.csv"));
        return 0;
    }
    if (model == "bm") {
        const Matrix cov = matrix_from_json(spec_json.at("cov"));
        const Vector x0 = vector_from_json(spec_json.at("x0"));
        const auto times = grid();
        Eigen::LLT<Matrix> llt(cov);
        std::normal_distribution<double> n01(0.0, 1.0);
        Matrix pos(static_cast<Index>(times.size()), x0.size());
        Vector x = x0;
        pos.row(0) = x.transpose();
        for (std::size_t i = 1; i < times.size(); ++i) {
            Vector z(x0.size());
            for (Index k = 0; k < z.size(); ++k) z[k] = n01(rng);
            x += std::sqrt(times[i] - times[i - 1]) * (Matrix(llt.matrixL()) * z);
            pos.row(static_cast<Index>(i)) = x.transpose();
        }
        write_path_csv(ctx.artifact("path.csv").string(), times, pos);
        ctx.write_sidecar(ctx.artifact("path.csv"));
        return 0;
    }
    if (model == "ou") {
        const OuParams p = ou_from_json(spec_json);
        const Vector x0 = vector_from_json(spec_json.at("x0"));
        const auto times = grid();
        const Matrix pos = simulate_ou(p, times, x0, rng);
        write_path_csv(ctx.artifact("path.csv").string(), times, pos);
        ctx.write_sidecar(ctx.artifact("path.csv"));
        return 0;
    }
    if (model == "iou") {
        IntegratedOuParams p;
        p.dim = spec_json.at("dim").get<Index>();
        p.b = spec_json.at("b").get<double>();
        p.equilibrium_var = spec_json.at("equilibrium_var").get<double>();
        p.mean_velocity = vector_from_json(spec_json.at("mean_velocity"));
        const Vector x0 = vector_from_json(spec_json.at("x0"));
        const Vector v0 = vector_from_json(spec_json.at("v0"));
        const auto times = grid();
        const IouPath path = simulate_integrated_ou(p, x0, v0, times, rng);
        write_path_csv(ctx.artifact("path.csv").string(), times, path.positions);
        ctx.write_sidecar(ctx.artifact("path.csv"));
        write_path_csv(ctx.artifact("velocity.csv").string(), times, path.velocities);
        ctx.write_sidecar(ctx.artifact("velocity.csv"));
        return 0;
    }
    if (model == "switching") {
        const GeneratorMatrix gen = generator_from_json(spec_json);
        std::vector<StateMovementModel> models;
        for (const auto& mj : spec_json.at("models")) {
            if (mj.at("type") == "brownian") {
                BrownianSpec bm{matrix_from_json(mj.at("cov"))};
                bm.validate();
                models.push_back(bm);
            } else if (mj.at("type") == "ou") {
                models.push_back(ou_from_json(mj));
            } else {
                throw InvalidInput("simulate switching: unknown movement model type");
            }
        }
        const Vector x0 = vector_from_json(spec_json.at("x0"));
        const int s0 = spec_json.at("s0").get<int>();
        const SwitchingPath path =
            simulate_switching_diffusion(gen, models, x0, s0, t0, t_end, rng);
        write_switching_path_csv(ctx.artifact("path.csv").string(), path);
        ctx.write_sidecar(ctx.artifact("path.csv"));
        return 0;
    }
    if (model == "sde") {
        const Json& pj = spec_json.at("potential");
        if (pj.at("kind") != "quadratic") {
            throw InvalidInput("simulate sde: only the quadratic potential is exposed here");
        }
        const double strength = pj.at("strength").get<double>();
        const Vector center = vector_from_json(pj.at("center"));
        const double sigma = spec_json.at("sigma").get<double>();
        const auto d = center.size();
        const SdeSpec spec = SdeSpec::from_potential_gradient(
            d, [strength, center](const Vector& x) { return Vector(strength * (x - center)); },
            sigma * Matrix::Identity(d, d));
        const Vector x0 = vector_from_json(spec_json.at("x0"));
        const auto times = grid();
        const Matrix pos = euler_simulate(spec, x0, times, rng);
        write_path_csv(ctx.artifact("path.csv").string(), times, pos);
        ctx.write_sidecar(ctx.artifact("path.csv"));
        return 0;
    }
    throw InvalidInput("simulate: unknown model '" + model + "'");
}

int cmd_bridge(RunContext& ctx, double ax, double ay, double bx, double by, double t1, double t2,
               double sigma2, double dt, bool with_samples) {
    Vector a(2), b(2);
    a << ax, ay;
    b << bx, by;
    std::vector<double> times;
    for (double t = t1; t <= t2 + 1e-12; t += dt) times.push_back(t);
    std::vector<BridgeMoments> moments;
    for (double t : times) {
        moments.push_back(brownian_bridge_marginal(a, b, t1, t2, sigma2, std::min(t, t2)));
    }
    std::optional<Matrix> samples;
    if (with_samples) {
        Rng rng = make_rng(ctx.seed);
        samples = sample_bridge_path(a, b, t1, t2, sigma2, times, rng);
    }
    write_bridge_csv(ctx.artifact("bridge.csv").string(), times, moments,
                     samples ? &*samples : nullptr);
    ctx.write_sidecar(ctx.artifact("bridge.csv"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"movestat: trajectory models (HMM, state space, diffusion)"};
    app.require_subcommand(1);

    RunContext ctx;
    std::string input, spec_path, backend = "kalman", model = "hmm";
    std::string out_dir = ".";
    std::vector<std::string> tol_kv;
    std::vector<std::string> candidates;
    int restarts = 10, particles = 2000, iterations = 20000, burnin = 2000;
    Index t_len = 100;
    double t0 = 0.0, t_end = 100.0, dt = 1.0;
    double ax = 0, ay = 0, bx = 0, by = 0, t1 = 0, t2 = 1, sigma2 = 1;
    bool laplace_fit = false, bridge_samples = false;
    std::int64_t seed_flag = -1;

    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_flag, "random seed (required for stochastic subcommands)");
    app.add_option("--workers", ctx.workers, "worker threads for parallel sections");
    app.add_option("--tol-override", tol_kv, "KEY=VAL tolerance overrides")->take_all();

    auto* fit = app.add_subcommand("fit-hmm", "fit an HMM to step/turn series");
    fit->add_option("--input", input, "trajectory CSV")->required();
    fit->add_option("--spec", spec_path, "HMM spec JSON")->required();
    fit->add_option("--restarts", restarts, "optimizer restarts");

    auto* select = app.add_subcommand("select-covariates", "AIC forward selection");
    select->add_option("--input", input, "trajectory CSV")->required();
    select->add_option("--spec", spec_path, "base HMM spec JSON")->required();
    select->add_option("--candidates", candidates, "candidate covariate names")->take_all();
    select->add_option("--restarts", restarts, "optimizer restarts");

    auto* filter = app.add_subcommand("filter", "state-space filtering/smoothing");
    filter->add_option("--input", input, "observation CSV (trajectory schema)")->required();
    filter->add_option("--spec", spec_path, "SSM spec JSON")->required();
    filter->add_option("--backend", backend, "kalman | laplace | particle | mcmc");
    filter->add_option("--particles", particles, "particle count");
    filter->add_option("--iterations", iterations, "MCMC iterations");
    filter->add_option("--burnin", burnin, "MCMC burn-in");
    filter->add_flag("--fit", laplace_fit, "laplace: also fit (sigma_z, sigma_y[, nu])");

    auto* simulate = app.add_subcommand("simulate", "simulate a model");
    simulate->add_option("--model", model, "hmm | bm | ou | iou | switching | sde");
    simulate->add_option("--spec", spec_path, "model spec JSON")->required();
    simulate->add_option("--length", t_len, "series length (hmm)");
    simulate->add_option("--t0", t0, "start time");
    simulate->add_option("--t-end", t_end, "end time");
    simulate->add_option("--dt", dt, "grid spacing");

    auto* bridge = app.add_subcommand("bridge", "Brownian bridge interpolation");
    bridge->add_option("--ax", ax)->required();
    bridge->add_option("--ay", ay)->required();
    bridge->add_option("--bx", bx)->required();
    bridge->add_option("--by", by)->required();
    bridge->add_option("--t1", t1)->required();
    bridge->add_option("--t2", t2)->required();
    bridge->add_option("--sigma2", sigma2)->required();
    bridge->add_option("--dt", dt, "query spacing");
    bridge->add_flag("--sample", bridge_samples, "draw a conditioned path (needs --seed)");

    CLI11_PARSE(app, argc, argv);

    try {
        ctx.out_dir = out_dir;
        for (const auto& kv : tol_kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw InvalidInput("--tol-override expects KEY=VAL");
            ctx.tol_overrides[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }
        const bool stochastic = fit->parsed() || select->parsed() || simulate->parsed() ||
                                (filter->parsed() && backend != "kalman" && backend != "laplace") ||
                                (bridge->parsed() && bridge_samples);
        if (seed_flag < 0) {
            if (stochastic) throw InvalidInput("--seed is required for stochastic subcommands");
            ctx.seed = 0;
        } else {
            ctx.seed = static_cast<std::uint64_t>(seed_flag);
            ctx.seed_set = true;
        }
        ctx.prepare_output();
        ctx.config = {{"out", out_dir}, {"seed", ctx.seed}, {"workers", ctx.workers}};
        for (auto* sub : app.get_subcommands()) ctx.config["subcommand"] = sub->get_name();
        ctx.config["input"] = input;
        ctx.config["spec"] = spec_path;

        if (fit->parsed()) return cmd_fit_hmm(ctx, input, spec_path, restarts);
        if (select->parsed()) {
            return cmd_select_covariates(ctx, input, spec_path, candidates, restarts);
        }
        if (filter->parsed()) {
            return cmd_filter(ctx, backend, input, spec_path, particles, iterations, burnin,
                              laplace_fit);
        }
        if (simulate->parsed()) return cmd_simulate(ctx, model, spec_path, t_len, t0, t_end, dt);
        if (bridge->parsed()) {
            return cmd_bridge(ctx, ax, ay, bx, by, t1, t2, sigma2, dt, bridge_samples);
        }
        throw InvalidInput("no subcommand given");
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
