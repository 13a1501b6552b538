#pragma once

#include <functional>
#include <span>
#include <vector>

namespace exsurv::stats {

/// One-sample Kolmogorov–Smirnov statistic sup |F_n - F|.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Asymptotic p-value of the KS statistic `d` at sample size `n`.
double ks_pvalue(double d, std::size_t n);

/// p-value of Pearson's goodness-of-fit test. Cells whose expected count is
/// below `min_expected` are pooled into one cell.
double chi_square_pvalue(std::span<const double> observed, std::span<const double> probs,
                         double min_expected = 5.0);

/// p-value of the chi-square test of homogeneity between two count vectors.
double two_sample_chi_square_pvalue(std::span<const double> a, std::span<const double> b,
                                    double min_expected = 5.0);

/// χ²₁ quantile at `level`, e.g. 3.8415 at 0.95.
double chi_square_quantile(double level, double dof = 1.0);

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(std::span<const double> xs);

/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace exsurv::stats
