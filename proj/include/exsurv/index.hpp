#pragma once

// Characteristic indices of exchangeable Markov survival processes.
//
// A characteristic index is a sequence zeta_0 = 0 < zeta_1 < zeta_2 < ...
// whose signed forward differences
//
//     lambda(r, d) = (-1)^(d-1) (Delta^d zeta)_r
//
// are non-negative. zeta_n is the exponential holding rate of a risk set of
// size n; lambda(r, d) is the rate at which a particular set of d particles
// fails together leaving r survivors, and q(r, d) = lambda(r, d) / zeta_{r+d}
// is the splitting probability.

#include <Eigen/Core>

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "exsurv/special.hpp"

namespace exsurv {

enum class Family { Harmonic, Gamma, Power, Linear, LinearShift, Geometric, BetaSplitting, FromMeasure };

std::string_view family_name(Family f);

/// Point mass of a measure.
struct Atom {
  double location;
  double mass;
};

/// Measure on [0, 1) generating a splitting rule through
/// lambda(r, d) = ∫ x^r (1-x)^d dislocation(dx) + c 1{d = 1}.
class DislocationMeasure {
 public:
  static DislocationMeasure from_density(std::function<double(double)> density);
  static DislocationMeasure from_atoms(std::vector<Atom> atoms);

  bool is_atomic() const { return !density_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double density(double x) const { return density_ ? density_(x) : 0.0; }

  /// ∫ f dϖ over [0, 1).
  double integrate(const std::function<double(double)>& f, const QuadratureOptions& opts = {}) const;

 private:
  std::function<double(double)> density_;
  std::vector<Atom> atoms_;
};

/// Drift plus Lévy measure on (0, ∞]; an atom at +∞ is a killing rate.
class LevyMeasure {
 public:
  LevyMeasure(double drift, std::function<double(double)> density, std::vector<Atom> atoms);

  double drift() const { return drift_; }
  bool has_density() const { return static_cast<bool>(density_); }
  double density(double z) const { return density_ ? density_(z) : 0.0; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  /// Characteristic exponent Ψ(t) = γ t + ∫ (1 - e^{-zt}) w(dz).
  double exponent(double t) const;

 private:
  double drift_;
  std::function<double(double)> density_;
  std::vector<Atom> atoms_;
};

LevyMeasure levy_from_dislocation(const DislocationMeasure& dislocation, double erosion);
std::pair<DislocationMeasure, double> dislocation_from_levy(const LevyMeasure& levy);

namespace family {
struct Harmonic { double rho; };
struct Gamma { double rho; };
struct Power { double alpha; };
struct Linear {};
struct LinearShift { double rho; };
struct Geometric { double alpha; };
struct BetaSplitting { double rho; double beta; };
struct FromMeasure { DislocationMeasure dislocation; double erosion; };
}  // namespace family

/// Immutable characteristic index: a family shape times a positive scale nu.
///
/// Splitting probabilities depend only on the shape, so they are unaffected
/// by the scale bit-for-bit.
class CharacteristicIndex {
 public:
  using Shape = std::variant<family::Harmonic, family::Gamma, family::Power, family::Linear,
                             family::LinearShift, family::Geometric, family::BetaSplitting,
                             family::FromMeasure>;

  static CharacteristicIndex harmonic(double nu, double rho);
  static CharacteristicIndex gamma(double nu, double rho);
  static CharacteristicIndex power(double alpha, double nu = 1.0);
  static CharacteristicIndex linear(double nu = 1.0);
  static CharacteristicIndex linear_shift(double rho, double nu = 1.0);
  static CharacteristicIndex geometric(double alpha, double nu = 1.0);
  static CharacteristicIndex beta_splitting(double rho, double beta, double nu = 1.0);
  static CharacteristicIndex from_measure(DislocationMeasure dislocation, double erosion,
                                          double nu = 1.0);

  Family family() const;
  const Shape& shape() const { return shape_; }
  double scale() const { return nu_; }
  CharacteristicIndex rescaled(double nu) const;

  /// zeta_n; zeta_0 = 0.
  double zeta(int n) const;
  /// zeta_n / zeta_1.
  double standardized_zeta(int n) const;
  /// (-1)^(d-1) (Delta^d zeta)_r.
  double lambda_rate(int r, int d) const;
  double log_lambda_rate(int r, int d) const;
  /// q(r, d) = lambda(r, d) / zeta_{r+d}.
  double split_prob(int r, int d) const;
  double log_split_prob(int r, int d) const;

  /// (-1)^(d-1) (Delta^d zeta)_r by the raw alternating sum. Loses all
  /// precision for large d; exposed for diagnostics and comparisons.
  double naive_lambda_rate(int r, int d) const;

  /// `name key=value ...`; not available for FromMeasure.
  std::string to_record() const;
  static CharacteristicIndex from_record(std::string_view record);

 private:
  CharacteristicIndex(Shape shape, double nu);

  double shape_zeta(int n) const;
  double log_shape_lambda(int r, int d) const;

  Shape shape_;
  double nu_;
};

/// Table of q(r, d) for r + d <= max_n, stored densely as q(r, d).
class SplittingRuleTable {
 public:
  SplittingRuleTable(int max_n, Eigen::MatrixXd q);

  int max_n() const { return max_n_; }
  double split_prob(int r, int d) const { return q_(r, d); }
  double log_split_prob(int r, int d) const;
  const Eigen::MatrixXd& matrix() const { return q_; }
  /// Overwrites one entry; used to build perturbed tables.
  void set(int r, int d, double value) { q_(r, d) = value; }

 private:
  int max_n_;
  Eigen::MatrixXd q_;
};

SplittingRuleTable build_table(const CharacteristicIndex& index, int max_n);

/// max over m = 1..n of |Σ_d C(m,d) q(m-d, d) - 1|.
double check_normalization(const SplittingRuleTable& table, int n);

/// |(1 - q(n,1)) q(n-d, d) - q(n-d, d+1) - q(n-d+1, d)|; needs n + 1 <= max_n.
double check_consistency(const SplittingRuleTable& table, int n, int d);

/// Largest consistency defect over all 1 <= d <= n < max_n.
double max_consistency_defect(const SplittingRuleTable& table);

/// Additivity defect of the tied-failure hazard atom:
/// log[λ(r+1,d)/λ(r,d)] - log[λ(r+d,1)/λ(r,1)]. Zero for every (r, d)
/// exactly when predictions are weakly continuous.
double weak_continuity_defect(const CharacteristicIndex& index, int r, int d);

/// Number of terms below which the alternating sum is trusted for the gamma
/// and power families.
inline constexpr int kNaiveDifferenceMaxOrder = 8;

}  // namespace exsurv
