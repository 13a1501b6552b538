#pragma once

// Estimation of (ρ, ν) for families ζ_n = ν Ψ_ρ(n) from censored survival data.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exsurv/index.hpp"
#include "exsurv/process.hpp"

namespace exsurv {

struct Record {
  double time;
  bool failed;
};

struct Dataset {
  std::vector<Record> records;
  std::string unit;

  int size() const { return static_cast<int>(records.size()); }
  int deaths() const;
};

/// Times must be positive and finite. Equal times form a tie; censorings at a
/// failure time are applied after the failures. Throws DataError.
RiskSetTrajectory to_trajectory(const Dataset& data);

/// The 6-MP arm of the Gehan leukemia trial: 21 times in weeks, 12 censored.
Dataset gehan_dataset();

/// Reads either a CSV with header `time,status` (1 failure, 0 censored) or
/// a list of times separated by commas or whitespace where a trailing `*`
/// marks censoring. Throws DataError.
Dataset read_dataset(std::istream& in, std::string unit = "");
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// A family whose shape depends on one parameter ρ > 0.
class ModelFamily {
 public:
  static ModelFamily harmonic();
  static ModelFamily gamma();
  static ModelFamily linear_shift();
  /// Beta-splitting with β held fixed.
  static ModelFamily beta_splitting(double beta);
  /// Accepts harmonic, gamma, linear-shift; beta needs the explicit factory.
  static ModelFamily from_name(const std::string& name);

  CharacteristicIndex at(double rho, double nu = 1.0) const;
  std::string name() const;

 private:
  ModelFamily(Family f, double beta) : family_(f), beta_(beta) {}
  Family family_;
  double beta_;
};

struct SufficientStats {
  /// Distinct failure times.
  int k;
  /// ∫ Ψ_ρ(R♯(t)) dt with ν = 1.
  double int_psi;
  /// ∫ R♯(t) dt.
  double total_risk_time;
  int n_deaths;
  /// Σ_j log λ_ρ(r_j, d_j) over failure epochs, ν = 1.
  double sum_log_lambda;
};

SufficientStats sufficient_stats(const Dataset& data, const ModelFamily& family, double rho);
SufficientStats sufficient_stats(const RiskSetTrajectory& traj, const ModelFamily& family, double rho);

/// k log ν - ν int_psi + Σ_j log λ_ρ(r_j, d_j).
double loglik(const Dataset& data, const ModelFamily& family, double rho, double nu);

/// ν̂ = k / int_psi(ρ). Throws DataError without failures.
double mle_nu_given_rho(const Dataset& data, const ModelFamily& family, double rho);

/// ℓ(ρ, ν̂(ρ)).
double profile_loglik(const Dataset& data, const ModelFamily& family, double rho);

enum class FitMethod { Mle, Moment };

struct FitOptions {
  double log_rho_lo = -3.0;
  double log_rho_hi = 8.0;
  int grid_points = 60;
  double tol = 1e-6;
  /// Treats ρ as a tuning constant; only ν is estimated.
  std::optional<double> fixed_rho;
  /// Step of the central-difference Hessian on (log ρ, log ν).
  double hessian_step = 1e-4;
  double ci_level = 0.95;
};

struct ProfilePoint {
  double rho;
  double loglik;
};

struct FitResult {
  FitMethod method;
  std::string family;
  double rho_hat;
  double nu_hat;
  double se_rho;
  double se_nu;
  double se_log_nu;
  /// 1/√k, the inverse square root of the information for log ν.
  double se_log_nu_information;
  double loglik;
  bool fixed_rho = false;
  /// The grid maximum sat at an end of the grid.
  bool boundary_warning = false;
  std::vector<ProfilePoint> profile;
  double ci_level = 0.0;
  /// Likelihood-ratio interval for log ρ; ±inf when not closed within the search range.
  std::pair<double, double> ci_log_rho{0.0, 0.0};
};

/// Profile over log ρ on a grid, golden-section refinement, ν profiled out,
/// numeric Hessian standard errors and a likelihood-ratio interval for log ρ.
FitResult fit_mle(const Dataset& data, const ModelFamily& family, const FitOptions& opts = {});

/// Solves deaths = ν Ψ_ρ(1) · risk time together with ν = k / int_psi(ρ).
FitResult fit_moment(const Dataset& data, const ModelFamily& family, const FitOptions& opts = {});

/// {x: 2 (lmax - f(x)) <= χ²₁(level)} around `center`, searched over [lo, hi].
std::pair<double, double> likelihood_interval(const std::function<double(double)>& profile, double center,
                                              double lmax, double level, double lo, double hi);

/// Likelihood-ratio interval for log ρ.
std::pair<double, double> profile_ci(const Dataset& data, const ModelFamily& family, const FitResult& fit,
                                     double level);

/// Right-continuous product-limit estimator; steps at the failure times.
struct KaplanMeier {
  std::vector<double> times;
  std::vector<double> survival;
  double at(double t) const;
};

KaplanMeier kaplan_meier(const Dataset& data);

/// Constant hazard deaths / risk time.
struct ExponentialFit {
  double rate;
  double mean;
  double survival(double t) const;
};

ExponentialFit exponential_fit(const Dataset& data);

struct EmpiricalBayesCurve {
  std::vector<double> t;
  std::vector<double> survival;
  /// Marginal rate ν̂ Ψ_ρ̂(1) and its reciprocal.
  double rate;
  double mean;
};

EmpiricalBayesCurve empirical_bayes_curve(const Dataset& data, const ModelFamily& family, const FitResult& fit,
                                          const std::vector<double>& t_grid);

/// JSON text; numbers carry six significant digits and NaN becomes null.
std::string fit_to_json(const FitResult& fit);

}  // namespace exsurv
