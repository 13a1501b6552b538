#pragma once

// Random-measure construction: lifetimes that are conditionally iid given a
// completely independent random measure Λ, with pr(T > t | Λ) = exp(-Λ(0, t]).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "exsurv/index.hpp"
#include "exsurv/random.hpp"

namespace exsurv {

/// Λ on (0, t_max]: drift times Lebesgue plus atoms sorted by location.
struct RandomMeasureRealization {
  double t_max;
  double drift;
  std::vector<Atom> atoms;
  double epsilon;

  /// Λ(0, t] for t <= t_max.
  double cumulative(double t) const;
  /// Λ(a, b].
  double mass(double a, double b) const { return cumulative(b) - cumulative(a); }
};

/// Mean number of gamma-measure atoms above epsilon in (0, t_max]: ν t_max E1(ρ ε).
double gamma_expected_atoms(double nu, double rho, double t_max, double epsilon);

/// Atoms of the Poisson process with intensity ν z^{-1} e^{-ρz} dx dz restricted
/// to z > epsilon; smaller atoms are dropped. Throws ResourceError when more than
/// 1e8 atoms are expected.
RandomMeasureRealization simulate_gamma_measure(double nu, double rho, double t_max, double epsilon, Rng& rng);

/// User-supplied atoms on (0, t_max] for other Lévy measures.
using AtomSampler = std::function<std::vector<Atom>(double t_max, Rng& rng)>;
RandomMeasureRealization simulate_measure(double drift, const AtomSampler& sampler, double t_max, Rng& rng);

/// n conditionally iid lifetimes; +inf when a particle outlives the window.
std::vector<double> survival_times_given_measure(int n, const RandomMeasureRealization& measure, Rng& rng);

/// pr(T_1 > t_1, ..., T_n > t_n) = exp(-∫ ζ(R♯(s)) ds), R♯(s) = #{i: t_i >= s}.
double joint_survival_exact(const std::vector<double>& times, const CharacteristicIndex& index);

/// E[e^{-rX} (1 - e^{-X})^d] / dt for X ~ Gamma(ν dt, ρ); tends to ν λ(r, d) as dt -> 0.
double gamma_atom_contribution(double nu, double rho, int r, int d, double dt);

struct EquivalenceReport {
  int n;
  int reps;
  double epsilon;
  /// Largest |z| of random-measure joint survival against the exact value.
  double max_z_measure_vs_exact;
  /// Largest |z| of Markov-chain joint survival against the exact value.
  double max_z_markov_vs_exact;
  /// Largest |z| between the two distinct-value count distributions.
  double max_z_distinct;
  /// Largest |change| / s.e. of the joint survival estimates when epsilon is halved.
  double max_z_epsilon_halved;
  double max_z() const;
};

/// Compares the gamma random-measure pathway with the Markov chain of index
/// gamma(ν, ρ) over all points of grid^n.
EquivalenceReport equivalence_check(double nu, double rho, int n, const std::vector<double>& grid, int reps,
                                    double epsilon, std::uint64_t seed, int workers = 1);

/// CSV with header location,mass.
void write_realization_csv(std::ostream& out, const RandomMeasureRealization& measure);

}  // namespace exsurv
