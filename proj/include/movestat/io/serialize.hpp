#pragma once

#include "movestat/diffusion/ctmc.hpp"
#include "movestat/diffusion/ou.hpp"
#include "movestat/diffusion/switching.hpp"
#include "movestat/hmm/hmm.hpp"
#include "movestat/ssm/laplace.hpp"
#include "movestat/ssm/mcmc.hpp"

#include <json.hpp>

#include <string>

namespace movestat {

using Json = nlohmann::json;

Json dist_to_json(const EmissionDist& d);
EmissionDist dist_from_json(const Json& j);

Json hmm_spec_to_json(const HmmSpec& spec);
HmmSpec hmm_spec_from_json(const Json& j);
Json fitted_hmm_to_json(const FittedHmm& fit);

Json lg_ssm_to_json(const LinearGaussianSsmSpec& spec);
LinearGaussianSsmSpec lg_ssm_from_json(const Json& j);
Json heavy_tail_ssm_to_json(const HeavyTailSsmSpec& spec);
HeavyTailSsmSpec heavy_tail_ssm_from_json(const Json& j);

Json switching_rw_to_json(const SwitchingRandomWalkSpec& spec);
SwitchingRandomWalkSpec switching_rw_from_json(const Json& j);

Json generator_to_json(const GeneratorMatrix& gen);
GeneratorMatrix generator_from_json(const Json& j);

Json ou_to_json(const OuParams& p);
OuParams ou_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

// CSV artifact writers shared by the CLI and tests. All doubles are written
// with round-trippable precision so reruns are byte-comparable.
void write_step_turn_csv(const std::string& path, const StepTurnSeries& series);
void write_states_csv(const std::string& path, const std::string& track_id,
                      const std::vector<int>& states);
void write_probs_csv(const std::string& path, const std::string& track_id, const Matrix& probs);
void write_residuals_csv(const std::string& path, const std::string& track_id,
                         const PseudoResiduals& residuals);
void write_path_csv(const std::string& path, const std::vector<double>& times,
                    const Matrix& positions, const std::vector<int>* states = nullptr);
void write_switching_path_csv(const std::string& path, const SwitchingPath& sp);
void write_filter_csv(const std::string& path, const std::vector<Vector>& means,
                      const std::vector<Matrix>& covs, const Vector& loglik_increments);
void write_chain_csv(const std::string& path, const std::vector<std::string>& names,
                     const Matrix& chain);
void write_bridge_csv(const std::string& path, const std::vector<double>& times,
                      const std::vector<BridgeMoments>& moments, const Matrix* samples = nullptr);

}  // namespace movestat
