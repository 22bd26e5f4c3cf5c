#include "movestat/io/serialize.hpp"

#include "movestat/core/csv.hpp"

#include <fstream>

namespace movestat {

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    const auto n = static_cast<Index>(j.size());
    if (n == 0) return Matrix();
    const auto m = static_cast<Index>(j.at(0).size());
    Matrix out(n, m);
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < m; ++c) out(i, c) = j.at(i).at(c).get<double>();
    }
    return out;
}

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vector vector_from_json(const Json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
    return v;
}

Json dist_to_json(const EmissionDist& d) {
    Json j;
    j["type"] = type_name(d);
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma> || std::is_same_v<T, Weibull>) {
                j["shape"] = a.shape;
                j["scale"] = a.scale;
            } else if constexpr (std::is_same_v<T, VonMises>) {
                j["mean"] = a.mean;
                j["kappa"] = a.kappa;
            } else if constexpr (std::is_same_v<T, WrappedCauchy>) {
                j["mean"] = a.mean;
                j["rho"] = a.rho;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                j["mean"] = a.mean;
                j["var"] = a.var;
            } else if constexpr (std::is_same_v<T, StudentT>) {
                j["location"] = a.location;
                j["scale"] = a.scale;
                j["df"] = a.df;
            } else if constexpr (std::is_same_v<T, MultivariateGaussian>) {
                j["mean"] = vector_to_json(a.mean);
                j["cov"] = matrix_to_json(a.cov);
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                j["zero_mass"] = a.zero_mass;
                j["inner"] = dist_to_json(*a.inner);
            }
        },
        d.value());
    return j;
}

EmissionDist dist_from_json(const Json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "gamma") return EmissionDist(Gamma{j.at("shape"), j.at("scale")});
    if (type == "weibull") return EmissionDist(Weibull{j.at("shape"), j.at("scale")});
    if (type == "von_mises") return EmissionDist(VonMises{j.at("mean"), j.at("kappa")});
    if (type == "wrapped_cauchy") return EmissionDist(WrappedCauchy{j.at("mean"), j.at("rho")});
    if (type == "gaussian") return EmissionDist(Gaussian{j.at("mean"), j.at("var")});
    if (type == "student_t") {
        return EmissionDist(StudentT{j.at("location"), j.at("scale"), j.at("df")});
    }
    if (type == "mv_gaussian") {
        return EmissionDist(MultivariateGaussian{vector_from_json(j.at("mean")),
                                                 matrix_from_json(j.at("cov"))});
    }
    if (type == "zero_inflated") {
        return zero_inflated(j.at("zero_mass").get<double>(), dist_from_json(j.at("inner")));
    }
    throw InvalidInput("dist_from_json: unknown type '" + type + "'");
}

Json hmm_spec_to_json(const HmmSpec& spec) {
    Json j;
    j["n_states"] = spec.n_states();
    Json states = Json::array();
    for (int i = 0; i < spec.n_states(); ++i) {
        Json s;
        s["step"] = dist_to_json(spec.step_dists[static_cast<std::size_t>(i)]);
        s["turn"] = dist_to_json(spec.turn_dists[static_cast<std::size_t>(i)]);
        states.push_back(s);
    }
    j["states"] = states;
    Json tr;
    tr["beta"] = matrix_to_json(spec.transition.beta);
    tr["covariates"] = spec.transition.covariate_names;
    switch (spec.transition.init_mode) {
        case TransitionModel::InitMode::Stationary: tr["initial"] = "stationary"; break;
        case TransitionModel::InitMode::Uniform: tr["initial"] = "uniform"; break;
        case TransitionModel::InitMode::Estimated:
            tr["initial"] = "estimated";
            tr["delta"] = vector_to_json(spec.transition.delta);
            break;
    }
    j["transition"] = tr;
    return j;
}

HmmSpec hmm_spec_from_json(const Json& j) {
    HmmSpec spec;
    const int n = j.at("n_states").get<int>();
    spec.transition.n_states = n;
    const Json& tr = j.at("transition");
    if (tr.contains("covariates")) {
        spec.transition.covariate_names = tr.at("covariates").get<std::vector<std::string>>();
    }
    if (tr.contains("beta")) {
        spec.transition.beta = matrix_from_json(tr.at("beta"));
    } else {
        spec.transition.beta =
            Matrix::Zero(spec.transition.n_pairs(), 1 + spec.transition.n_covariates());
    }
    const std::string init = tr.value("initial", "stationary");
    if (init == "stationary") {
        spec.transition.init_mode = TransitionModel::InitMode::Stationary;
    } else if (init == "uniform") {
        spec.transition.init_mode = TransitionModel::InitMode::Uniform;
    } else if (init == "estimated") {
        spec.transition.init_mode = TransitionModel::InitMode::Estimated;
        spec.transition.delta = vector_from_json(tr.at("delta"));
    } else {
        throw InvalidInput("hmm_spec_from_json: unknown initial mode '" + init + "'");
    }
    for (const auto& s : j.at("states")) {
        spec.step_dists.push_back(dist_from_json(s.at("step")));
        spec.turn_dists.push_back(dist_from_json(s.at("turn")));
    }
    spec.validate();
    return spec;
}

Json fitted_hmm_to_json(const FittedHmm& fit) {
    Json j;
    j["spec"] = hmm_spec_to_json(fit.spec);
    j["log_likelihood"] = fit.log_likelihood;
    j["n_parameters"] = fit.n_parameters;
    j["aic"] = fit.aic;
    j["working_params"] = vector_to_json(fit.working_params);
    j["convergence"] = {{"converged", fit.report.converged},
                        {"grad_norm", fit.report.grad_norm},
                        {"iterations", fit.report.iterations},
                        {"n_starts", fit.report.n_starts},
                        {"n_converged", fit.report.n_converged}};
    Json means = Json::array();
    for (const auto& d : fit.spec.step_dists) means.push_back(mean(d));
    j["state_mean_step_lengths"] = means;
    return j;
}

Json lg_ssm_to_json(const LinearGaussianSsmSpec& spec) {
    Json j;
    j["type"] = "linear_gaussian";
    j["transition"] = matrix_to_json(spec.transition);
    j["offset"] = vector_to_json(spec.offset);
    j["process_cov"] = matrix_to_json(spec.process_cov);
    j["obs_matrix"] = matrix_to_json(spec.obs_matrix);
    j["obs_cov"] = matrix_to_json(spec.obs_cov);
    j["init_mean"] = vector_to_json(spec.init_mean);
    j["init_cov"] = matrix_to_json(spec.init_cov);
    return j;
}

LinearGaussianSsmSpec lg_ssm_from_json(const Json& j) {
    LinearGaussianSsmSpec spec;
    spec.transition = matrix_from_json(j.at("transition"));
    spec.offset = vector_from_json(j.at("offset"));
    spec.process_cov = matrix_from_json(j.at("process_cov"));
    spec.obs_matrix = matrix_from_json(j.at("obs_matrix"));
    spec.obs_cov = matrix_from_json(j.at("obs_cov"));
    spec.init_mean = vector_from_json(j.at("init_mean"));
    spec.init_cov = matrix_from_json(j.at("init_cov"));
    spec.validate();
    return spec;
}

Json heavy_tail_ssm_to_json(const HeavyTailSsmSpec& spec) {
    Json j = lg_ssm_to_json(spec.core);
    j["type"] = "heavy_tail";
    j["obs_error"] = {{"type", spec.obs_error.kind == ObsErrorModel::Kind::Gaussian
                                   ? "gaussian"
                                   : "student_t"},
                      {"scale", spec.obs_error.scale},
                      {"df", spec.obs_error.df}};
    return j;
}

HeavyTailSsmSpec heavy_tail_ssm_from_json(const Json& j) {
    HeavyTailSsmSpec spec;
    spec.core = lg_ssm_from_json(j);
    const Json& e = j.at("obs_error");
    spec.obs_error.kind = e.at("type").get<std::string>() == "gaussian"
                              ? ObsErrorModel::Kind::Gaussian
                              : ObsErrorModel::Kind::StudentT;
    spec.obs_error.scale = e.at("scale").get<double>();
    spec.obs_error.df = e.value("df", 5.0);
    spec.validate();
    return spec;
}

Json switching_rw_to_json(const SwitchingRandomWalkSpec& spec) {
    Json j;
    j["type"] = "switching_random_walk";
    j["n_states"] = spec.n_states;
    j["dim"] = spec.dim;
    j["trans"] = matrix_to_json(spec.trans);
    j["initial"] = vector_to_json(spec.initial);
    Json drifts = Json::array();
    for (const auto& d : spec.drift) drifts.push_back(vector_to_json(d));
    j["drift"] = drifts;
    j["sigma"] = spec.sigma;
    j["obs_sigma"] = spec.obs_sigma;
    j["init_mean"] = vector_to_json(spec.init_mean);
    j["init_cov"] = matrix_to_json(spec.init_cov);
    return j;
}

SwitchingRandomWalkSpec switching_rw_from_json(const Json& j) {
    SwitchingRandomWalkSpec spec;
    spec.n_states = j.at("n_states").get<int>();
    spec.dim = j.at("dim").get<Index>();
    spec.trans = matrix_from_json(j.at("trans"));
    spec.initial = vector_from_json(j.at("initial"));
    for (const auto& d : j.at("drift")) spec.drift.push_back(vector_from_json(d));
    spec.sigma = j.at("sigma").get<std::vector<double>>();
    spec.obs_sigma = j.at("obs_sigma").get<double>();
    spec.init_mean = vector_from_json(j.at("init_mean"));
    spec.init_cov = matrix_from_json(j.at("init_cov"));
    spec.validate();
    return spec;
}

Json generator_to_json(const GeneratorMatrix& gen) {
    Json j;
    j["generator"] = matrix_to_json(gen.g);
    return j;
}

GeneratorMatrix generator_from_json(const Json& j) {
    return GeneratorMatrix(matrix_from_json(j.at("generator")));
}

Json ou_to_json(const OuParams& p) {
    Json j;
    j["type"] = "ou";
    j["center"] = vector_to_json(p.center);
    j["attraction"] = matrix_to_json(p.attraction);
    j["equilibrium_cov"] = matrix_to_json(p.equilibrium_cov);
    return j;
}

OuParams ou_from_json(const Json& j) {
    return OuParams::general(vector_from_json(j.at("center")),
                             matrix_from_json(j.at("attraction")),
                             matrix_from_json(j.at("equilibrium_cov")));
}

void write_step_turn_csv(const std::string& path, const StepTurnSeries& series) {
    std::string out = "t,step,turn,valid\n";
    for (Index t = 0; t < series.size(); ++t) {
        const bool valid = series.step_valid[static_cast<std::size_t>(t)];
        const bool tvalid = series.turn_valid[static_cast<std::size_t>(t)];
        out += std::to_string(t) + "," + (valid ? format_double(series.steps[t]) : "") + "," +
               (tvalid ? format_double(series.turns[t]) : "") + "," +
               (valid ? (tvalid ? "1" : "step_only") : "0") + "\n";
    }
    write_file(path, out);
}

void write_states_csv(const std::string& path, const std::string& track_id,
                      const std::vector<int>& states) {
    std::string out = "track,t,state\n";
    for (std::size_t t = 0; t < states.size(); ++t) {
        out += track_id + "," + std::to_string(t) + "," + std::to_string(states[t]) + "\n";
    }
    write_file(path, out);
}

void write_probs_csv(const std::string& path, const std::string& track_id, const Matrix& probs) {
    std::string out = "track,t";
    for (Index j = 0; j < probs.cols(); ++j) out += ",p" + std::to_string(j + 1);
    out += "\n";
    for (Index t = 0; t < probs.rows(); ++t) {
        out += track_id + "," + std::to_string(t);
        for (Index j = 0; j < probs.cols(); ++j) out += "," + format_double(probs(t, j));
        out += "\n";
    }
    write_file(path, out);
}

void write_residuals_csv(const std::string& path, const std::string& track_id,
                         const PseudoResiduals& residuals) {
    std::string out = "track,t,step_residual,turn_residual\n";
    for (Index t = 0; t < residuals.step.size(); ++t) {
        out += track_id + "," + std::to_string(t) + ",";
        if (residuals.step_valid[static_cast<std::size_t>(t)]) {
            out += format_double(residuals.step[t]);
        }
        out += ",";
        if (residuals.turn_valid[static_cast<std::size_t>(t)]) {
            out += format_double(residuals.turn[t]);
        }
        out += "\n";
    }
    write_file(path, out);
}

void write_path_csv(const std::string& path, const std::vector<double>& times,
                    const Matrix& positions, const std::vector<int>* states) {
    std::string out = "time";
    for (Index j = 0; j < positions.cols(); ++j) {
        out += positions.cols() == 1 ? ",x" : (j == 0 ? ",x" : ",y");
    }
    if (states) out += ",state";
    out += "\n";
    for (Index t = 0; t < positions.rows(); ++t) {
        out += format_double(times[static_cast<std::size_t>(t)]);
        for (Index j = 0; j < positions.cols(); ++j) out += "," + format_double(positions(t, j));
        if (states) out += "," + std::to_string((*states)[static_cast<std::size_t>(t)]);
        out += "\n";
    }
    write_file(path, out);
}

void write_switching_path_csv(const std::string& path, const SwitchingPath& sp) {
    const Index d = sp.events.front().location.size();
    std::string out = d == 1 ? "time,state,x\n" : "time,state,x,y\n";
    for (const auto& e : sp.events) {
        out += format_double(e.time) + "," + std::to_string(e.state);
        for (Index j = 0; j < d; ++j) out += "," + format_double(e.location[j]);
        out += "\n";
    }
    write_file(path, out);
}

void write_filter_csv(const std::string& path, const std::vector<Vector>& means,
                      const std::vector<Matrix>& covs, const Vector& loglik_increments) {
    const Index d = means.empty() ? 0 : means.front().size();
    std::string out = "t";
    for (Index j = 0; j < d; ++j) out += ",mean_" + std::to_string(j + 1);
    for (Index j = 0; j < d; ++j) out += ",var_" + std::to_string(j + 1);
    out += ",loglik_increment\n";
    for (std::size_t t = 0; t < means.size(); ++t) {
        out += std::to_string(t);
        for (Index j = 0; j < d; ++j) out += "," + format_double(means[t][j]);
        for (Index j = 0; j < d; ++j) out += "," + format_double(covs[t](j, j));
        out += "," + format_double(loglik_increments[static_cast<Index>(t)]);
        out += "\n";
    }
    write_file(path, out);
}

void write_chain_csv(const std::string& path, const std::vector<std::string>& names,
                     const Matrix& chain) {
    std::string out = "iteration,parameter,value\n";
    for (Index i = 0; i < chain.rows(); ++i) {
        for (Index p = 0; p < chain.cols(); ++p) {
            out += std::to_string(i) + "," + names[static_cast<std::size_t>(p)] + "," +
                   format_double(chain(i, p)) + "\n";
        }
    }
    write_file(path, out);
}

void write_bridge_csv(const std::string& path, const std::vector<double>& times,
                      const std::vector<BridgeMoments>& moments, const Matrix* samples) {
    const Index d = moments.empty() ? 0 : moments.front().mean.size();
    std::string out = "time";
    for (Index j = 0; j < d; ++j) out += ",mean_" + std::to_string(j + 1);
    out += ",variance";
    if (samples) {
        for (Index j = 0; j < d; ++j) out += ",sample_" + std::to_string(j + 1);
    }
    out += "\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
        out += format_double(times[i]);
        for (Index j = 0; j < d; ++j) out += "," + format_double(moments[i].mean[j]);
        out += "," + format_double(moments[i].variance);
        if (samples) {
            for (Index j = 0; j < d; ++j) {
                out += "," + format_double((*samples)(static_cast<Index>(i), j));
            }
        }
        out += "\n";
    }
    write_file(path, out);
}

}  // namespace movestat
