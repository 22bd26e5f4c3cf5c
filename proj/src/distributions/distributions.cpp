#include "movestat/distributions/distributions.hpp"

#include "movestat/core/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace movestat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
    if (!ok) throw InvalidInput(msg);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }
double inv_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// transforms stay inside the open parameter domains even when the optimizer
// wanders to extreme working values
double safe_exp(double x) { return std::max(std::exp(x), 1e-300); }
double safe_unit(double x) { return std::clamp(inv_logit(x), 1e-14, 1.0 - 1e-14); }

}  // namespace

EmissionDist::EmissionDist(Gamma d) : v_(d) {
    require(d.shape > 0.0 && d.scale > 0.0, "Gamma: shape and scale must be positive");
}
EmissionDist::EmissionDist(Weibull d) : v_(d) {
    require(d.shape > 0.0 && d.scale > 0.0, "Weibull: shape and scale must be positive");
}
EmissionDist::EmissionDist(VonMises d) : v_(d) {
    require(d.kappa >= 0.0 && std::isfinite(d.kappa), "VonMises: kappa must be >= 0");
    std::get<VonMises>(v_).mean = wrap_angle(d.mean);
}
EmissionDist::EmissionDist(WrappedCauchy d) : v_(d) {
    require(d.rho >= 0.0 && d.rho < 1.0, "WrappedCauchy: rho must be in [0,1)");
    std::get<WrappedCauchy>(v_).mean = wrap_angle(d.mean);
}
EmissionDist::EmissionDist(Gaussian d) : v_(d) {
    require(d.var > 0.0, "Gaussian: variance must be positive");
}
EmissionDist::EmissionDist(StudentT d) : v_(d) {
    require(d.scale > 0.0 && d.df > 0.0, "StudentT: scale and df must be positive");
}
EmissionDist::EmissionDist(MultivariateGaussian d) : v_(std::move(d)) {
    const auto& m = std::get<MultivariateGaussian>(v_);
    require(m.cov.rows() == m.cov.cols() && m.cov.rows() == m.mean.size(),
            "MultivariateGaussian: dimension mismatch");
    Eigen::LLT<Matrix> llt(m.cov);
    require(llt.info() == Eigen::Success, "MultivariateGaussian: covariance not PD");
}
EmissionDist::EmissionDist(ZeroInflated d) : v_(std::move(d)) {
    const auto& z = std::get<ZeroInflated>(v_);
    require(z.zero_mass >= 0.0 && z.zero_mass <= 1.0, "ZeroInflated: weight outside [0,1]");
    require(z.inner != nullptr, "ZeroInflated: missing inner distribution");
    require(z.inner->get_if<Gamma>() != nullptr || z.inner->get_if<Weibull>() != nullptr,
            "ZeroInflated: inner distribution must be strictly positive (gamma or weibull)");
}

EmissionDist zero_inflated(double zero_mass, EmissionDist inner) {
    return EmissionDist(ZeroInflated{zero_mass, std::make_shared<EmissionDist>(std::move(inner))});
}

double log_density(const EmissionDist& d, double x) {
    return std::visit(
        [&](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma>) {
                // support is taken as the open half-line (0, inf)
                if (x <= 0.0) return kNegInf;
                return (a.shape - 1.0) * std::log(x) - x / a.scale - std::lgamma(a.shape) -
                       a.shape * std::log(a.scale);
            } else if constexpr (std::is_same_v<T, Weibull>) {
                if (x <= 0.0) return kNegInf;
                const double z = x / a.scale;
                return std::log(a.shape / a.scale) + (a.shape - 1.0) * std::log(z) -
                       std::pow(z, a.shape);
            } else if constexpr (std::is_same_v<T, VonMises>) {
                const double ang = wrap_angle(x);
                return a.kappa * std::cos(ang - a.mean) - std::log(kTwoPi) -
                       log_bessel_i0(a.kappa);
            } else if constexpr (std::is_same_v<T, WrappedCauchy>) {
                const double ang = wrap_angle(x);
                const double r2 = a.rho * a.rho;
                return std::log1p(-r2) - std::log(kTwoPi) -
                       std::log(1.0 + r2 - 2.0 * a.rho * std::cos(ang - a.mean));
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                const double z = x - a.mean;
                return -0.5 * (kLogTwoPi + std::log(a.var) + z * z / a.var);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                const double z = (x - a.location) / a.scale;
                return std::lgamma(0.5 * (a.df + 1.0)) - std::lgamma(0.5 * a.df) -
                       0.5 * std::log(a.df * kPi) - std::log(a.scale) -
                       0.5 * (a.df + 1.0) * std::log1p(z * z / a.df);
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                if (x == 0.0) return a.zero_mass > 0.0 ? std::log(a.zero_mass) : kNegInf;
                if (a.zero_mass >= 1.0) return kNegInf;
                return std::log1p(-a.zero_mass) + log_density(*a.inner, x);
            } else {
                throw InvalidInput("log_density: scalar input to a multivariate distribution");
            }
        },
        d.value());
}

double log_density(const EmissionDist& d, const Vector& x) {
    if (const auto* m = d.get_if<MultivariateGaussian>()) {
        Eigen::LLT<Matrix> llt(m->cov);
        const Vector r = x - m->mean;
        const Vector w = llt.matrixL().solve(r);
        double logdet = 0.0;
        for (Index i = 0; i < m->cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
        return -0.5 * (x.size() * kLogTwoPi + w.squaredNorm()) - logdet;
    }
    require(x.size() == 1, "log_density: vector input to a univariate distribution");
    return log_density(d, x[0]);
}

namespace {

// Best & Fisher rejection sampler for the von Mises distribution.
double sample_von_mises(const VonMises& d, Rng& rng) {
    if (d.kappa < 1e-10) {
        std::uniform_real_distribution<double> u(-kPi, kPi);
        return wrap_angle(u(rng) + d.mean);
    }
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * d.kappa * d.kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * d.kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (;;) {
        const double u1 = unif(rng);
        const double z = std::cos(kPi * u1);
        const double f = (1.0 + r * z) / (r + z);
        const double c = d.kappa * (r - f);
        const double u2 = unif(rng);
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
            const double u3 = unif(rng);
            const double sign = u3 < 0.5 ? -1.0 : 1.0;
            return wrap_angle(sign * std::acos(f) + d.mean);
        }
    }
}

}  // namespace

double sample(const EmissionDist& d, Rng& rng) {
    return std::visit(
        [&](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma>) {
                std::gamma_distribution<double> g(a.shape, a.scale);
                return g(rng);
            } else if constexpr (std::is_same_v<T, Weibull>) {
                std::weibull_distribution<double> w(a.shape, a.scale);
                return w(rng);
            } else if constexpr (std::is_same_v<T, VonMises>) {
                return sample_von_mises(a, rng);
            } else if constexpr (std::is_same_v<T, WrappedCauchy>) {
                if (a.rho <= 0.0) {
                    std::uniform_real_distribution<double> u(-kPi, kPi);
                    return wrap_angle(u(rng) + a.mean);
                }
                std::cauchy_distribution<double> c(a.mean, -std::log(a.rho));
                return wrap_angle(c(rng));
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                std::normal_distribution<double> n(a.mean, std::sqrt(a.var));
                return n(rng);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                std::student_t_distribution<double> t(a.df);
                return a.location + a.scale * t(rng);
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                std::uniform_real_distribution<double> u(0.0, 1.0);
                if (u(rng) < a.zero_mass) return 0.0;
                return sample(*a.inner, rng);
            } else {
                throw InvalidInput("sample: use sample_vector for multivariate distributions");
            }
        },
        d.value());
}

Vector sample_vector(const EmissionDist& d, Rng& rng) {
    if (const auto* m = d.get_if<MultivariateGaussian>()) {
        Eigen::LLT<Matrix> llt(m->cov);
        std::normal_distribution<double> n(0.0, 1.0);
        Vector z(m->mean.size());
        for (Index i = 0; i < z.size(); ++i) z[i] = n(rng);
        return m->mean + Matrix(llt.matrixL()) * z;
    }
    Vector out(1);
    out[0] = sample(d, rng);
    return out;
}

namespace {

double circular_cdf(const EmissionDist& d, double x) {
    // cdf over (-pi, pi] by quadrature of the wrapped density
    const double ang = wrap_angle(x);
    if (ang <= -kPi) return 0.0;
    return integrate([&](double t) { return std::exp(log_density(d, t)); }, -kPi, ang, 1e-12);
}

}  // namespace

double cdf(const EmissionDist& d, double x) {
    return std::visit(
        [&](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma>) {
                if (x <= 0.0) return 0.0;
                return gamma_p(a.shape, x / a.scale);
            } else if constexpr (std::is_same_v<T, Weibull>) {
                if (x <= 0.0) return 0.0;
                return -std::expm1(-std::pow(x / a.scale, a.shape));
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return normal_cdf((x - a.mean) / std::sqrt(a.var));
            } else if constexpr (std::is_same_v<T, StudentT>) {
                const double z = (x - a.location) / a.scale;
                const double p = 0.5 * beta_inc(0.5 * a.df, 0.5, a.df / (a.df + z * z));
                return z > 0.0 ? 1.0 - p : p;
            } else if constexpr (std::is_same_v<T, VonMises> ||
                                 std::is_same_v<T, WrappedCauchy>) {
                return circular_cdf(d, x);
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                if (x < 0.0) return 0.0;
                return a.zero_mass + (1.0 - a.zero_mass) * cdf(*a.inner, x);
            } else {
                throw InvalidInput("cdf: undefined for multivariate distributions");
            }
        },
        d.value());
}

double cdf_left(const EmissionDist& d, double x) {
    if (const auto* z = d.get_if<ZeroInflated>()) {
        if (x <= 0.0) return 0.0;
        return z->zero_mass + (1.0 - z->zero_mass) * cdf(*z->inner, x);
    }
    return cdf(d, x);
}

double mean(const EmissionDist& d) {
    return std::visit(
        [&](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma>) {
                return a.shape * a.scale;
            } else if constexpr (std::is_same_v<T, Weibull>) {
                return a.scale * std::exp(std::lgamma(1.0 + 1.0 / a.shape));
            } else if constexpr (std::is_same_v<T, VonMises> ||
                                 std::is_same_v<T, WrappedCauchy>) {
                return a.mean;  // circular mean direction
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return a.mean;
            } else if constexpr (std::is_same_v<T, StudentT>) {
                return a.location;
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                return (1.0 - a.zero_mass) * mean(*a.inner);
            } else {
                throw InvalidInput("mean: scalar mean undefined for multivariate distributions");
            }
        },
        d.value());
}

bool is_circular(const EmissionDist& d) {
    return d.get_if<VonMises>() != nullptr || d.get_if<WrappedCauchy>() != nullptr;
}

std::string type_name(const EmissionDist& d) {
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma>) return "gamma";
            if constexpr (std::is_same_v<T, Weibull>) return "weibull";
            if constexpr (std::is_same_v<T, VonMises>) return "von_mises";
            if constexpr (std::is_same_v<T, WrappedCauchy>) return "wrapped_cauchy";
            if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
            if constexpr (std::is_same_v<T, StudentT>) return "student_t";
            if constexpr (std::is_same_v<T, MultivariateGaussian>) return "mv_gaussian";
            if constexpr (std::is_same_v<T, ZeroInflated>) return "zero_inflated";
        },
        d.value());
}

int working_param_count(const EmissionDist& d) {
    return std::visit(
        [&](const auto& a) -> int {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma> || std::is_same_v<T, Weibull> ||
                          std::is_same_v<T, VonMises> || std::is_same_v<T, WrappedCauchy> ||
                          std::is_same_v<T, Gaussian>) {
                return 2;
            } else if constexpr (std::is_same_v<T, StudentT>) {
                return 3;
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                return 1 + working_param_count(*a.inner);
            } else {
                throw InvalidInput("working params: multivariate distributions not fittable");
            }
        },
        d.value());
}

void pack_working_params(const EmissionDist& d, double* out) {
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma> || std::is_same_v<T, Weibull>) {
                out[0] = std::log(a.shape);
                out[1] = std::log(a.scale);
            } else if constexpr (std::is_same_v<T, VonMises>) {
                out[0] = a.mean;
                out[1] = std::log(std::max(a.kappa, 1e-12));
            } else if constexpr (std::is_same_v<T, WrappedCauchy>) {
                out[0] = a.mean;
                out[1] = logit(std::min(std::max(a.rho, 1e-12), 1.0 - 1e-12));
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                out[0] = a.mean;
                out[1] = std::log(a.var);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                out[0] = a.location;
                out[1] = std::log(a.scale);
                out[2] = std::log(a.df);
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                out[0] = logit(std::min(std::max(a.zero_mass, 1e-12), 1.0 - 1e-12));
                pack_working_params(*a.inner, out + 1);
            } else {
                throw InvalidInput("working params: multivariate distributions not fittable");
            }
        },
        d.value());
}

EmissionDist unpack_working_params(const EmissionDist& tmpl, const double* p) {
    return std::visit(
        [&](const auto& a) -> EmissionDist {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Gamma>) {
                return EmissionDist(Gamma{safe_exp(p[0]), safe_exp(p[1])});
            } else if constexpr (std::is_same_v<T, Weibull>) {
                return EmissionDist(Weibull{safe_exp(p[0]), safe_exp(p[1])});
            } else if constexpr (std::is_same_v<T, VonMises>) {
                return EmissionDist(VonMises{wrap_angle(p[0]), safe_exp(p[1])});
            } else if constexpr (std::is_same_v<T, WrappedCauchy>) {
                return EmissionDist(WrappedCauchy{wrap_angle(p[0]), safe_unit(p[1])});
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return EmissionDist(Gaussian{p[0], safe_exp(p[1])});
            } else if constexpr (std::is_same_v<T, StudentT>) {
                return EmissionDist(StudentT{p[0], safe_exp(p[1]), safe_exp(p[2])});
            } else if constexpr (std::is_same_v<T, ZeroInflated>) {
                return zero_inflated(safe_unit(p[0]), unpack_working_params(*a.inner, p + 1));
            } else {
                throw InvalidInput("working params: multivariate distributions not fittable");
            }
        },
        tmpl.value());
}

}  // namespace movestat
