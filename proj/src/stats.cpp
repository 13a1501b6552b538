#include "exsurv/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>

#include "exsurv/errors.hpp"

namespace exsurv::stats {

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ParameterError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  // Stephens' small-sample correction to the Kolmogorov limit law.
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  if (t < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

namespace {

double chi2_sf(double x, double dof) {
  if (dof < 1) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

}  // namespace

double chi_square_pvalue(std::span<const double> observed, std::span<const double> probs,
                         double min_expected) {
  if (observed.size() != probs.size()) throw ParameterError("chi_square: size mismatch");
  double total = 0.0;
  for (double o : observed) total += o;
  double stat = 0.0;
  int cells = 0;
  double pooled_o = 0.0;
  double pooled_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probs[i];
    if (e < min_expected) {
      pooled_o += observed[i];
      pooled_e += e;
      continue;
    }
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  } else if (pooled_o > 0.0) {
    return 0.0;
  }
  return chi2_sf(stat, cells - 1);
}

double two_sample_chi_square_pvalue(std::span<const double> a, std::span<const double> b,
                                    double min_expected) {
  if (a.size() != b.size()) throw ParameterError("two_sample_chi_square: size mismatch");
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
  }
  const double n = na + nb;
  double stat = 0.0;
  int cells = 0;
  double pa = 0.0;
  double pb = 0.0;
  auto add = [&](double oa, double ob) {
    const double col = oa + ob;
    const double ea = na * col / n;
    const double eb = nb * col / n;
    stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    ++cells;
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = a[i] + b[i];
    if (std::min(na, nb) * col / n < min_expected) {
      pa += a[i];
      pb += b[i];
      continue;
    }
    add(a[i], b[i]);
  }
  if (pa + pb > 0.0) add(pa, pb);
  return chi2_sf(stat, cells - 1);
}

double chi_square_quantile(double level, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(dist, level);
}

MeanSe mean_se(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) throw ParameterError("mean_se: need at least two values");
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("ols_slope: bad input");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace exsurv::stats
