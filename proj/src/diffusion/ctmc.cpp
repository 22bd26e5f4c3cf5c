#include "movestat/diffusion/ctmc.hpp"

#include <cmath>
#include <limits>

namespace movestat {

GeneratorMatrix::GeneratorMatrix(Matrix generator) : g(std::move(generator)) {
    if (g.rows() != g.cols() || g.rows() < 1) {
        throw InvalidInput("GeneratorMatrix: must be square");
    }
    for (Index i = 0; i < g.rows(); ++i) {
        for (Index j = 0; j < g.cols(); ++j) {
            if (i != j && g(i, j) < 0.0) {
                throw InvalidInput("GeneratorMatrix: negative off-diagonal rate");
            }
        }
        if (std::abs(g.row(i).sum()) > 1e-12 * std::max(1.0, g.row(i).cwiseAbs().maxCoeff())) {
            throw InvalidInput("GeneratorMatrix: row " + std::to_string(i) +
                               " does not sum to zero");
        }
    }
}

CtmcViews ctmc_views(const GeneratorMatrix& gen) {
    const int n = gen.n_states();
    CtmcViews v;
    v.rates = -gen.g.diagonal();
    v.jump = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (v.rates[i] > 0.0) {
            for (int j = 0; j < n; ++j) {
                if (i != j) v.jump(i, j) = gen.g(i, j) / v.rates[i];
            }
        }
    }
    return v;
}

Vector ctmc_stationary(const GeneratorMatrix& gen) {
    const int n = gen.n_states();
    // pi G = 0 with the normalization sum(pi) = 1: replace one equation
    Matrix a = gen.g.transpose();
    a.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs[n - 1] = 1.0;
    Vector pi = a.fullPivLu().solve(rhs);
    if ((pi.array() < -1e-9).any()) {
        throw NumericalError("ctmc_stationary: negative stationary mass (reducible chain?)");
    }
    pi = pi.cwiseMax(0.0);
    return pi / pi.sum();
}

void CtmcSufficientStats::validate() const {
    const Index n = holding_times.size();
    if (transition_counts.rows() != n || transition_counts.cols() != n) {
        throw InvalidInput("CtmcSufficientStats: dimension mismatch");
    }
    if ((holding_times.array() < 0.0).any()) {
        throw InvalidInput("CtmcSufficientStats: negative holding time");
    }
    for (Index i = 0; i < n; ++i) {
        if (transition_counts(i, i) != 0) {
            throw InvalidInput("CtmcSufficientStats: diagonal counts must be zero");
        }
        for (Index j = 0; j < n; ++j) {
            if (transition_counts(i, j) < 0) {
                throw InvalidInput("CtmcSufficientStats: negative transition count");
            }
        }
    }
}

double ctmc_log_likelihood(const Vector& rates, const Matrix& jump,
                           const CtmcSufficientStats& stats) {
    stats.validate();
    const Index n = rates.size();
    if (jump.rows() != n || stats.holding_times.size() != n) {
        throw InvalidInput("ctmc_log_likelihood: dimension mismatch");
    }
    double total = -(rates.array() * stats.holding_times.array()).sum();
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const int count = stats.transition_counts(i, j);
            if (count == 0) continue;
            const double p = jump(i, j) * rates[i];
            if (!(p > 0.0)) {
                return -std::numeric_limits<double>::infinity();  // impossible transition observed
            }
            total += count * std::log(p);
        }
    }
    return total;
}

}  // namespace movestat
