#pragma once

#include <functional>

namespace movestat {

// log I0(x), the modified Bessel function of the first kind, order zero.
// Series for small arguments, asymptotic expansion for large ones; relative
// accuracy ~1e-14 over the range used by circular densities.
double log_bessel_i0(double x);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

double normal_cdf(double z);
double normal_log_pdf(double z);
// Inverse standard normal cdf (Acklam's rational approximation plus one
// Halley refinement; |error| < 1e-14 on (0,1)).
double normal_quantile(double p);

// Adaptive Simpson quadrature on [a, b] with absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10, int max_depth = 30);

}  // namespace movestat
