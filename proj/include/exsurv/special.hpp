#pragma once

#include <cstddef>
#include <functional>

namespace exsurv {

/// log C(n, k); exact-to-rounding for n <= 1000, lgamma-based beyond.
double log_binomial(int n, int k);
double binomial(int n, int k);

double digamma(double x);
double trigamma(double x);
double log_beta(double a, double b);

/// Γ(a)/Γ(a+delta) on the log scale, accurate when delta << a.
double log_gamma_delta_ratio(double a, double delta);

/// Tolerances and the evaluation cap shared by every quadrature in the library.
struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t max_nodes = 10000;
};

/// log ∫_0^∞ exp(log_f(z)) dz for a unimodal log-integrand.
/// The integrand is rescaled by its peak so results far below DBL_MIN survive.
/// Throws ConvergenceError past `max_nodes` evaluations or when the error
/// estimate misses the tolerance.
double log_integrate_half_line(const std::function<double(double)>& log_f,
                               const QuadratureOptions& opts = {});

/// ∫_0^1 f(x) dx; integrable endpoint singularities are allowed.
double integrate_unit_interval(const std::function<double(double)>& f,
                               const QuadratureOptions& opts = {});

}  // namespace exsurv

namespace exsurv {

/// ∫_0^∞ f(z) dz for an integrand decaying at infinity.
double integrate_half_line(const std::function<double(double)>& f,
                           const QuadratureOptions& opts = {});

}  // namespace exsurv
