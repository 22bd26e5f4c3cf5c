#pragma once

#include "movestat/core/rng.hpp"
#include "movestat/core/types.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace movestat {

class EmissionDist;

struct Gamma {
    double shape, scale;
};
struct Weibull {
    double shape, scale;
};
struct VonMises {
    double mean, kappa;  // mean in (-pi, pi], kappa >= 0
};
struct WrappedCauchy {
    double mean, rho;  // rho in [0, 1)
};
struct Gaussian {
    double mean, var;
};
struct StudentT {
    double location, scale, df;
};
struct MultivariateGaussian {
    Vector mean;
    Matrix cov;
};
// Point mass at zero mixed with a strictly positive distribution.
struct ZeroInflated {
    double zero_mass;  // pi0 in [0, 1]
    std::shared_ptr<const EmissionDist> inner;
};

using DistVariant = std::variant<Gamma, Weibull, VonMises, WrappedCauchy, Gaussian,
                                 StudentT, MultivariateGaussian, ZeroInflated>;

class EmissionDist {
public:
    EmissionDist(Gamma d);  // NOLINT: implicit by design, mirrors a tagged union
    EmissionDist(Weibull d);
    EmissionDist(VonMises d);
    EmissionDist(WrappedCauchy d);
    EmissionDist(Gaussian d);
    EmissionDist(StudentT d);
    EmissionDist(MultivariateGaussian d);
    EmissionDist(ZeroInflated d);

    const DistVariant& value() const { return v_; }
    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&v_);
    }

private:
    DistVariant v_;
};

EmissionDist zero_inflated(double zero_mass, EmissionDist inner);

double log_density(const EmissionDist& d, double x);
double log_density(const EmissionDist& d, const Vector& x);
double sample(const EmissionDist& d, Rng& rng);
Vector sample_vector(const EmissionDist& d, Rng& rng);
// cdf of a univariate distribution (throws for the multivariate case).
double cdf(const EmissionDist& d, double x);
// Left limit of the cdf at x; differs from cdf(x) only at atoms.
double cdf_left(const EmissionDist& d, double x);
double mean(const EmissionDist& d);
bool is_circular(const EmissionDist& d);
std::string type_name(const EmissionDist& d);

// Unconstrained working-parameter transforms used by likelihood fitting.
// Layout is fixed per type; zero-inflated packs [logit pi0, inner...].
int working_param_count(const EmissionDist& d);
void pack_working_params(const EmissionDist& d, double* out);
EmissionDist unpack_working_params(const EmissionDist& shape_template, const double* params);

}  // namespace movestat
