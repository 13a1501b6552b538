#pragma once

// Continuous-time Markov survival processes: simulation with censoring,
// trajectory densities and predictive distributions.

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "exsurv/index.hpp"
#include "exsurv/random.hpp"
#include "exsurv/ranking.hpp"

namespace exsurv {

/// Failures and censorings at one time. Censoring is applied after the
/// failures at the same time. Id lists are optional but, when given, must
/// match the counts.
struct Event {
  double time;
  int failures;
  int censored;
  std::vector<int> failed_ids = {};
  std::vector<int> censored_ids = {};
};

class RiskSetTrajectory {
 public:
  RiskSetTrajectory() = default;
  /// Throws ParameterError on an invalid event list.
  RiskSetTrajectory(int n0, std::vector<Event> events);

  int n0() const { return n0_; }
  const std::vector<Event>& events() const { return events_; }
  bool has_ids() const { return has_ids_; }

  /// Particles never failed nor censored.
  int unresolved() const;
  int total_failures() const;
  int total_censored() const;
  /// Number of distinct failure times.
  int failure_epochs() const;
  /// R♯(t-): risk count just before t.
  int at_risk_before(double t) const;

 private:
  int n0_ = 0;
  std::vector<Event> events_;
  bool has_ids_ = true;
};

/// Per-particle censoring times; +inf means uncensored and 0 removes the particle.
using CensoringPlan = std::vector<double>;

CensoringPlan no_censoring(int n);

/// Risk-set chain simulator. Holds a block-size sampler, so reuse it across
/// replicates; not thread-safe.
class Simulator {
 public:
  explicit Simulator(CharacteristicIndex index);

  RiskSetTrajectory run(int n, Rng& rng) const;
  RiskSetTrajectory run(const CensoringPlan& plan, Rng& rng) const;

  const CharacteristicIndex& index() const { return index_; }

 private:
  CharacteristicIndex index_;
  RankingSampler sampler_;
};

RiskSetTrajectory simulate(int n, const CharacteristicIndex& index, const CensoringPlan& plan, Rng& rng);

/// Log-density; zero-probability structures are flagged instead of thrown.
struct LogDensity {
  double value;
  bool zero_probability;
};

/// -∫ ζ(R♯(s)) ds + Σ_j log λ(r_j, d_j). Every particle must fail or be censored.
LogDensity log_density(const RiskSetTrajectory& traj, const CharacteristicIndex& index);

/// Predictive law of the next lifetime: piecewise-constant hazard λ(R♯, 1)
/// between event times plus atoms at the failure times.
class Predictive {
 public:
  Predictive(const RiskSetTrajectory& history, const CharacteristicIndex& index);

  double survival(double t) const;
  double sample(Rng& rng) const;

  struct Atom {
    double time;
    /// Probability of surviving the atom: λ(r+1, d) / λ(r, d).
    double pass;
  };
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  // Hazard hazard_[i] on [breaks_[i], breaks_[i+1]); the last piece is unbounded.
  std::vector<double> breaks_;
  std::vector<double> hazard_;
  std::vector<Atom> atoms_;
};

double predictive_survival(double t, const RiskSetTrajectory& history, const CharacteristicIndex& index);
double sample_next(const RiskSetTrajectory& history, const CharacteristicIndex& index, Rng& rng);

/// History with one more particle that fails at `time`. New particle id is n0.
RiskSetTrajectory add_failure(const RiskSetTrajectory& history, double time);

/// Appends m_new lifetimes drawn sequentially from the predictive law.
RiskSetTrajectory seeded_simulate(const RiskSetTrajectory& seed, int m_new, const CharacteristicIndex& index,
                                  Rng& rng);

/// Survivors past t with times shifted by -t.
RiskSetTrajectory residual_trajectory(const RiskSetTrajectory& traj, double t);

/// Monotone time change t = g(s) with g(0+) = 0; the induced hazard measure
/// has density d g^{-1}/dt.
struct TimeTransform {
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
  std::function<double(double)> log_inverse_derivative;

  static TimeTransform identity();
  static TimeTransform scale(double c);
  /// g(s) = s^(1/a), so g^{-1}(t) = t^a.
  static TimeTransform power(double a);
};

RiskSetTrajectory apply_time_transform(const RiskSetTrajectory& traj, const TimeTransform& tf);

/// Density of a trajectory on the transformed scale: the original density at
/// g^{-1}(times) plus one log d g^{-1}/dt term per failure time.
LogDensity log_density(const RiskSetTrajectory& traj, const CharacteristicIndex& index, const TimeTransform& tf);

/// CSV with header time,n_failures,n_censored; n0 is the total count.
void write_trajectory_csv(std::ostream& out, const RiskSetTrajectory& traj);
RiskSetTrajectory read_trajectory_csv(std::istream& in);

}  // namespace exsurv
