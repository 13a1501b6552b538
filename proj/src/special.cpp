#include "exsurv/special.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "exsurv/errors.hpp"

namespace exsurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class CountedIntegrand {
 public:
  CountedIntegrand(const std::function<double(double)>& f, std::size_t& count, std::size_t cap)
      : f_(f), count_(count), cap_(cap) {}

  double operator()(double x) const {
    if (++count_ > cap_) {
      throw ConvergenceError("quadrature exceeded " + std::to_string(cap_) + " evaluations");
    }
    return f_(x);
  }

 private:
  const std::function<double(double)>& f_;
  std::size_t& count_;
  std::size_t cap_;
};

void check_error(double value, double error, const QuadratureOptions& opts) {
  if (!std::isfinite(value)) throw NumericError("quadrature produced a non-finite value");
  if (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(value))) {
    throw ConvergenceError("quadrature error estimate " + std::to_string(error) +
                           " above tolerance");
  }
}

boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  thread_local boost::math::quadrature::tanh_sinh<double> rule(10);
  return rule;
}

boost::math::quadrature::exp_sinh<double>& exp_sinh_rule() {
  thread_local boost::math::quadrature::exp_sinh<double> rule(9);
  return rule;
}

}  // namespace

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return -kInf;
  if (n <= 1000) return std::log(boost::math::binomial_coefficient<double>(n, k));
  return boost::math::lgamma(n + 1.0) - boost::math::lgamma(k + 1.0) -
         boost::math::lgamma(n - k + 1.0);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (n <= 1000) return boost::math::binomial_coefficient<double>(n, k);
  return std::exp(log_binomial(n, k));
}

double digamma(double x) { return boost::math::digamma(x); }
double trigamma(double x) { return boost::math::trigamma(x); }

double log_gamma_delta_ratio(double a, double delta) {
  const double r = boost::math::tgamma_delta_ratio(a, delta);
  // Near underflow the ratio comes back denormal with lost digits.
  if (r > 1e-290 && r < 1e290) return std::log(r);
  return boost::math::lgamma(a) - boost::math::lgamma(a + delta);
}

double log_beta(double a, double b) {
  // B(a,b) = Γ(b) Γ(a)/Γ(a+b); expand around the larger argument.
  if (a < b) std::swap(a, b);
  return boost::math::lgamma(b) + log_gamma_delta_ratio(a, b);
}

double log_integrate_half_line(const std::function<double(double)>& log_f,
                               const QuadratureOptions& opts) {
  // Peak in u = log z.
  auto neg = [&](double u) {
    const double v = log_f(std::exp(u));
    return std::isfinite(v) ? -v : kInf;
  };
  const auto [u_star, neg_peak] =
      boost::math::tools::brent_find_minima(neg, -40.0, 40.0, 40);
  const double peak = -neg_peak;
  if (!std::isfinite(peak)) throw NumericError("integrand has no finite peak");
  const double z_star = std::exp(u_star);

  std::function<double(double)> scaled = [&](double z) {
    if (z <= 0.0) return 0.0;
    const double v = log_f(z) - peak;
    return v < -745.0 ? 0.0 : std::exp(v);
  };

  std::size_t count = 0;
  const CountedIntegrand f(scaled, count, opts.max_nodes);
  double total = 0.0;
  double total_error = 0.0;
  QuadratureOptions piece = opts;
  piece.abs_tol = 0.0;
  if (z_star > 1e-30) {
    double err = 0.0;
    double l1 = 0.0;
    const double head = tanh_sinh_rule().integrate(f, 0.0, z_star, opts.rel_tol * 1e-2, &err, &l1);
    total += head;
    total_error += err;
  }
  {
    double err = 0.0;
    double l1 = 0.0;
    const double tail = exp_sinh_rule().integrate(f, z_star, kInf, opts.rel_tol * 1e-2, &err, &l1);
    total += tail;
    total_error += err;
  }
  check_error(total, total_error, piece);
  if (total <= 0.0) return -kInf;
  return peak + std::log(total);
}

double integrate_unit_interval(const std::function<double(double)>& fn,
                               const QuadratureOptions& opts) {
  std::size_t count = 0;
  const CountedIntegrand f(fn, count, opts.max_nodes);
  double err = 0.0;
  double l1 = 0.0;
  const double value = tanh_sinh_rule().integrate(f, 0.0, 1.0, opts.rel_tol * 1e-2, &err, &l1);
  check_error(value, err, opts);
  return value;
}

}  // namespace exsurv

namespace exsurv {

double integrate_half_line(const std::function<double(double)>& fn, const QuadratureOptions& opts) {
  std::size_t count = 0;
  const CountedIntegrand f(fn, count, opts.max_nodes);
  double err = 0.0;
  double l1 = 0.0;
  const double value = exp_sinh_rule().integrate(f, 0.0, kInf, opts.rel_tol * 1e-2, &err, &l1);
  check_error(value, err, opts);
  return value;
}

}  // namespace exsurv
