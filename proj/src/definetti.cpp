#include "exsurv/definetti.hpp"

#include <boost/math/special_functions/expint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "exsurv/errors.hpp"
#include "exsurv/process.hpp"
#include "exsurv/special.hpp"
#include "exsurv/text.hpp"

namespace exsurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxExpectedAtoms = 1e8;

double e1(double x) { return boost::math::expint(1, x); }

// One draw from the density ∝ y^{-1} e^{-y} on (a, ∞). The mixture component is
// fixed before rejection so each piece is sampled exactly.
double gamma_levy_mass(double a, double w_head, double w_tail, Rng& rng) {
  if (a < 1.0 && uniform_open(rng) * (w_head + w_tail) < w_head) {
    // Head (a, 1]: propose from y^{-1}, accept with e^{-y}.
    for (;;) {
      const double y = a * std::exp(-std::log(a) * uniform_open(rng));
      if (uniform_open(rng) < std::exp(-y)) return y;
    }
  }
  // Tail (max(a,1), ∞): propose from e^{-y}, accept with start/y.
  const double start = std::max(a, 1.0);
  for (;;) {
    const double y = start + exponential(rng, 1.0);
    if (uniform_open(rng) < start / y) return y;
  }
}

// First time at which Λ(0, t] reaches `threshold`.
double lifetime_from_threshold(const RandomMeasureRealization& m, double threshold) {
  double cum = 0.0;
  double prev = 0.0;
  for (const auto& atom : m.atoms) {
    const double at_atom = cum + m.drift * (atom.location - prev);
    if (m.drift > 0.0 && at_atom >= threshold) return prev + (threshold - cum) / m.drift;
    cum = at_atom + atom.mass;
    prev = atom.location;
    if (cum >= threshold) return atom.location;
  }
  if (m.drift > 0.0 && cum + m.drift * (m.t_max - prev) >= threshold) return prev + (threshold - cum) / m.drift;
  return kInf;
}

}  // namespace

double RandomMeasureRealization::cumulative(double t) const {
  if (t < 0.0 || t > t_max) throw ParameterError("cumulative: t outside the window");
  double s = drift * t;
  for (const auto& a : atoms) {
    if (a.location > t) break;
    s += a.mass;
  }
  return s;
}

double gamma_expected_atoms(double nu, double rho, double t_max, double epsilon) {
  if (!(nu >= 0.0) || !(rho > 0.0) || !(t_max > 0.0) || !(epsilon > 0.0)) {
    throw ParameterError("gamma measure needs nu >= 0, rho > 0, t_max > 0, epsilon > 0");
  }
  return nu * t_max * e1(rho * epsilon);
}

RandomMeasureRealization simulate_gamma_measure(double nu, double rho, double t_max, double epsilon, Rng& rng) {
  const double mean = gamma_expected_atoms(nu, rho, t_max, epsilon);
  if (mean > kMaxExpectedAtoms) {
    throw ResourceError("epsilon too small: about " + format_sig6(mean) + " atoms expected");
  }
  RandomMeasureRealization m{t_max, 0.0, {}, epsilon};
  if (mean == 0.0) return m;
  const auto count = std::poisson_distribution<long>(mean)(rng);
  const double a = rho * epsilon;
  const double w_head = a < 1.0 ? e1(a) - e1(1.0) : 0.0;
  const double w_tail = e1(std::max(a, 1.0));
  m.atoms.reserve(count);
  for (long i = 0; i < count; ++i) {
    const double x = t_max * uniform_open(rng);
    m.atoms.push_back({x, gamma_levy_mass(a, w_head, w_tail, rng) / rho});
  }
  std::sort(m.atoms.begin(), m.atoms.end(), [](const Atom& p, const Atom& q) { return p.location < q.location; });
  return m;
}

RandomMeasureRealization simulate_measure(double drift, const AtomSampler& sampler, double t_max, Rng& rng) {
  if (!(drift >= 0.0) || !(t_max > 0.0)) throw ParameterError("measure needs drift >= 0 and t_max > 0");
  RandomMeasureRealization m{t_max, drift, sampler ? sampler(t_max, rng) : std::vector<Atom>{}, 0.0};
  for (const auto& a : m.atoms) {
    if (!(a.location > 0.0 && a.location <= t_max) || !(a.mass > 0.0)) {
      throw ParameterError("atoms need locations in (0, t_max] and positive masses");
    }
  }
  std::sort(m.atoms.begin(), m.atoms.end(), [](const Atom& p, const Atom& q) { return p.location < q.location; });
  return m;
}

std::vector<double> survival_times_given_measure(int n, const RandomMeasureRealization& measure, Rng& rng) {
  if (n < 0) throw ParameterError("n must be non-negative");
  std::vector<double> t(n);
  for (double& x : t) x = lifetime_from_threshold(measure, exponential(rng, 1.0));
  return t;
}

double joint_survival_exact(const std::vector<double>& times, const CharacteristicIndex& index) {
  std::vector<double> t = times;
  for (double x : t) {
    if (!(x >= 0.0)) throw ParameterError("times must be non-negative");
  }
  std::sort(t.begin(), t.end());
  // R♯ = n - j on (t_(j-1), t_(j)].
  const int n = static_cast<int>(t.size());
  double integral = 0.0;
  double prev = 0.0;
  for (int j = 0; j < n; ++j) {
    if (t[j] > prev) {
      if (std::isinf(t[j])) return 0.0;
      integral += index.zeta(n - j) * (t[j] - prev);
      prev = t[j];
    }
  }
  return std::exp(-integral);
}

double gamma_atom_contribution(double nu, double rho, int r, int d, double dt) {
  if (r < 0 || d < 1 || !(dt > 0.0)) throw ParameterError("need r >= 0, d >= 1, dt > 0");
  // Σ_j C(d,j) (-1)^j E e^{-(r+j)X}, with Σ_j C(d,j)(-1)^j = 0 removed through expm1.
  double s = 0.0;
  for (int j = 0; j <= d; ++j) {
    const double term = binomial(d, j) * std::expm1(-nu * dt * std::log1p((r + j) / rho));
    s += (j % 2 == 0) ? term : -term;
  }
  return s / dt;
}

double EquivalenceReport::max_z() const {
  return std::max({max_z_measure_vs_exact, max_z_markov_vs_exact, max_z_distinct});
}

EquivalenceReport equivalence_check(double nu, double rho, int n, const std::vector<double>& grid, int reps,
                                    double epsilon, std::uint64_t seed, int workers) {
  if (n < 1 || n > 8) throw ParameterError("equivalence_check supports 1 <= n <= 8");
  if (grid.empty() || reps < 2 || workers < 1) throw ParameterError("need a grid, reps >= 2 and workers >= 1");
  const auto index = CharacteristicIndex::gamma(nu, rho);
  // Window long enough that a lifetime beyond it has probability below 1e-9 / n.
  const double t_max = std::max(std::log(n * 1e9) / index.zeta(1), *std::max_element(grid.begin(), grid.end()));

  std::vector<std::vector<double>> points;
  {
    std::vector<int> digit(n, 0);
    for (;;) {
      std::vector<double> p(n);
      for (int i = 0; i < n; ++i) p[i] = grid[digit[i]];
      points.push_back(p);
      int i = 0;
      while (i < n && ++digit[i] == static_cast<int>(grid.size())) digit[i++] = 0;
      if (i == n) break;
    }
  }
  const std::size_t np = points.size();

  struct Tally {
    std::vector<double> fine, coarse, markov;
    std::vector<double> distinct_measure, distinct_markov;
  };
  auto fresh = [&] {
    return Tally{std::vector<double>(np), std::vector<double>(np), std::vector<double>(np),
                 std::vector<double>(n + 2), std::vector<double>(n + 2)};
  };
  std::vector<Tally> tallies(workers, fresh());

  auto distinct = [](std::vector<double> t) {
    std::sort(t.begin(), t.end());
    return static_cast<int>(std::unique(t.begin(), t.end()) - t.begin());
  };
  auto survives = [](const std::vector<double>& t, const std::vector<double>& p) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(t[i] > p[i])) return false;
    }
    return true;
  };

  auto work = [&](int w) {
    Tally& tally = tallies[w];
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(w));
    Rng chain_rng = make_rng(seed, static_cast<std::uint64_t>(workers + w));
    const Simulator sim(index);
    std::vector<double> thresholds(n);
    std::vector<double> fine(n);
    std::vector<double> coarse(n);
    std::vector<double> chain(n);
    for (int rep = w; rep < reps; rep += workers) {
      // Draw at epsilon/2; dropping atoms <= epsilon gives the coupled epsilon realization.
      const auto m_fine = simulate_gamma_measure(nu, rho, t_max, epsilon / 2.0, rng);
      RandomMeasureRealization m_coarse{t_max, 0.0, {}, epsilon};
      for (const auto& a : m_fine.atoms) {
        if (a.mass > epsilon) m_coarse.atoms.push_back(a);
      }
      for (int i = 0; i < n; ++i) {
        thresholds[i] = exponential(rng, 1.0);
        fine[i] = lifetime_from_threshold(m_fine, thresholds[i]);
        coarse[i] = lifetime_from_threshold(m_coarse, thresholds[i]);
      }
      const auto traj = sim.run(n, chain_rng);
      for (const auto& e : traj.events()) {
        for (int id : e.failed_ids) chain[id] = e.time;
      }
      for (std::size_t k = 0; k < np; ++k) {
        tally.fine[k] += survives(fine, points[k]);
        tally.coarse[k] += survives(coarse, points[k]);
        tally.markov[k] += survives(chain, points[k]);
      }
      tally.distinct_measure[distinct(coarse)] += 1.0;
      tally.distinct_markov[distinct(chain)] += 1.0;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  Tally total = fresh();
  for (const auto& t : tallies) {
    for (std::size_t k = 0; k < np; ++k) {
      total.fine[k] += t.fine[k];
      total.coarse[k] += t.coarse[k];
      total.markov[k] += t.markov[k];
    }
    for (int k = 0; k < n + 2; ++k) {
      total.distinct_measure[k] += t.distinct_measure[k];
      total.distinct_markov[k] += t.distinct_markov[k];
    }
  }

  EquivalenceReport report{n, reps, epsilon, 0.0, 0.0, 0.0, 0.0};
  auto z_one = [&](double count, double p) {
    const double var = p * (1.0 - p) / reps;
    return var > 0.0 ? std::abs(count / reps - p) / std::sqrt(var) : (count / reps == p ? 0.0 : kInf);
  };
  for (std::size_t k = 0; k < np; ++k) {
    const double exact = joint_survival_exact(points[k], index);
    report.max_z_measure_vs_exact = std::max(report.max_z_measure_vs_exact, z_one(total.coarse[k], exact));
    report.max_z_markov_vs_exact = std::max(report.max_z_markov_vs_exact, z_one(total.markov[k], exact));
    const double p = total.coarse[k] / reps;
    const double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / reps) / reps);
    report.max_z_epsilon_halved =
        std::max(report.max_z_epsilon_halved, std::abs(total.fine[k] - total.coarse[k]) / reps / se);
  }
  for (int k = 0; k < n + 2; ++k) {
    const double a = total.distinct_measure[k] / reps;
    const double b = total.distinct_markov[k] / reps;
    const double pooled = (a + b) / 2.0;
    const double var = pooled * (1.0 - pooled) * 2.0 / reps;
    if (var > 0.0) report.max_z_distinct = std::max(report.max_z_distinct, std::abs(a - b) / std::sqrt(var));
  }
  return report;
}

void write_realization_csv(std::ostream& out, const RandomMeasureRealization& measure) {
  out << "location,mass\n";
  for (const auto& a : measure.atoms) out << format_exact(a.location) << ',' << format_exact(a.mass) << '\n';
}

}  // namespace exsurv
