#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "exsurv/definetti.hpp"
#include "exsurv/errors.hpp"
#include "exsurv/stats.hpp"

using exsurv::CharacteristicIndex;

TEST_CASE("gamma measure: total mass and marginal law") {
  auto rng = exsurv::make_rng(21);
  {
    // E Λ(0, T] = ν T / ρ.
    const double nu = 1.5;
    const double rho = 2.0;
    const double t_max = 100.0;
    std::vector<double> total(1000);
    for (double& x : total) x = exsurv::simulate_gamma_measure(nu, rho, t_max, 1e-6, rng).cumulative(t_max);
    const auto [mean, se] = exsurv::stats::mean_se(total);
    const double target = nu * t_max / rho;
    CHECK(std::abs(mean - target) < 0.02 * target);
    CHECK(std::abs(mean - target) < 3.0 * se + nu * t_max * 1e-6);
  }
  {
    const double nu = 2.0;
    const double rho = 3.0;
    std::vector<double> first(10000);
    for (double& x : first) x = exsurv::simulate_gamma_measure(nu, rho, 1.0, 1e-8, rng).cumulative(1.0);
    const double d = exsurv::stats::ks_statistic(first, [&](double x) { return boost::math::gamma_p(nu, rho * x); });
    CHECK(exsurv::stats::ks_pvalue(d, first.size()) > 0.01);
  }
  {
    std::vector<double> a(10000);
    std::vector<double> b(10000);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto m = exsurv::simulate_gamma_measure(1.0, 1.0, 2.0, 1e-8, rng);
      a[i] = m.mass(0.0, 1.0);
      b[i] = m.mass(1.0, 2.0);
    }
    const auto [ma, sa] = exsurv::stats::mean_se(a);
    const auto [mb, sb] = exsurv::stats::mean_se(b);
    double cov = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      cov += (a[i] - ma) * (b[i] - mb);
      va += (a[i] - ma) * (a[i] - ma);
      vb += (b[i] - mb) * (b[i] - mb);
    }
    const double corr = cov / std::sqrt(va * vb);
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(a.size())));
  }
  CHECK(exsurv::simulate_gamma_measure(0.0, 1.0, 5.0, 1e-8, rng).atoms.empty());
  CHECK_THROWS_AS(exsurv::simulate_gamma_measure(1.0, 1.0, 1e6, 1e-300, rng), exsurv::ResourceError);
  CHECK_THROWS_AS(exsurv::simulate_gamma_measure(1.0, 0.0, 1.0, 1e-3, rng), exsurv::ParameterError);
}

TEST_CASE("characteristic exponent of the gamma measure") {
  auto rng = exsurv::make_rng(22);
  const double nu = 1.0;
  const double rho = 1.0;
  std::vector<double> x(100000);
  for (double& v : x) v = exsurv::simulate_gamma_measure(nu, rho, 1.0, 1e-8, rng).cumulative(1.0);
  for (double t : {1.0, 2.0, 5.0}) {
    double s = 0.0;
    for (double v : x) s += std::exp(-t * v);
    const double empirical = std::log(s / x.size());
    const double exact = -nu * std::log1p(t / rho);
    CAPTURE(t);
    CHECK(std::abs(empirical / exact - 1.0) < 0.02);
  }
}

TEST_CASE("lifetimes given a measure") {
  auto rng = exsurv::make_rng(23);
  CHECK(exsurv::survival_times_given_measure(0, exsurv::simulate_measure(1.0, {}, 1.0, rng), rng).empty());
  {
    const auto drift = exsurv::simulate_measure(0.7, {}, 1e6, rng);
    const auto t = exsurv::survival_times_given_measure(10000, drift, rng);
    const double d = exsurv::stats::ks_statistic(t, [](double x) { return -std::expm1(-0.7 * x); });
    CHECK(exsurv::stats::ks_pvalue(d, t.size()) > 0.01);
  }
  {
    // Two atoms and no drift: mass at each atom or survival past the window.
    const double z1 = 0.4;
    const double z2 = 1.1;
    const auto toy = exsurv::simulate_measure(
        0.0, [&](double, exsurv::Rng&) { return std::vector<exsurv::Atom>{{2.0, z2}, {1.0, z1}}; }, 3.0, rng);
    CHECK(toy.cumulative(1.5) == z1);
    const auto t = exsurv::survival_times_given_measure(100000, toy, rng);
    std::vector<double> counts(3, 0.0);
    for (double x : t) counts[x == 1.0 ? 0 : (x == 2.0 ? 1 : 2)] += 1.0;
    const std::vector<double> probs = {-std::expm1(-z1), std::exp(-z1) * -std::expm1(-z2), std::exp(-z1 - z2)};
    CHECK(counts[2] > 0.0);
    CHECK(exsurv::stats::chi_square_pvalue(counts, probs) > 0.001);
    CHECK(std::isinf(*std::max_element(t.begin(), t.end())));
  }
  CHECK_THROWS_AS(exsurv::simulate_measure(0.0, [](double, exsurv::Rng&) { return std::vector<exsurv::Atom>{{5.0, 1.0}}; },
                                           3.0, rng),
                  exsurv::ParameterError);
}

TEST_CASE("joint survival function") {
  const auto g = CharacteristicIndex::gamma(1.0, 1.0);
  CHECK(exsurv::joint_survival_exact({0.7}, g) == doctest::Approx(std::exp(-std::log(2.0) * 0.7)).epsilon(1e-15));
  CHECK(exsurv::joint_survival_exact({0.0, 0.0, 0.0}, g) == 1.0);
  CHECK(exsurv::joint_survival_exact({1.0, 2.0}, g) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(exsurv::joint_survival_exact({2.0, 1.0}, g) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(exsurv::joint_survival_exact({}, g) == 1.0);
}

TEST_CASE("atom contribution converges linearly to nu lambda(r, d)") {
  const double nu = 0.8;
  const double rho = 1.7;
  const auto g = CharacteristicIndex::gamma(nu, rho);
  const std::vector<double> dts = {1e-2, 1e-3, 1e-4};
  for (auto [r, d] : {std::pair{0, 1}, std::pair{2, 2}, std::pair{1, 4}}) {
    const double target = g.lambda_rate(r, d);
    std::vector<double> slope;
    for (double dt : dts) slope.push_back(std::abs(exsurv::gamma_atom_contribution(nu, rho, r, d, dt) - target) / dt);
    CAPTURE(r);
    CAPTURE(d);
    // err/dt settles to a constant.
    CHECK(std::abs(slope[2] - slope[1]) < std::abs(slope[1] - slope[0]));
    CHECK(slope[2] * dts[2] < 1e-3 * target);
  }
  // 50-digit reference errors for (r, d) = (2, 2).
  const std::vector<double> ref = {4.611480299304392e-07, 5.916114666243082e-08, 6.9744709689078836e-09};
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double err = std::abs(exsurv::gamma_atom_contribution(nu, rho, 2, 2, dts[i]) - g.lambda_rate(2, 2));
    CHECK(err == doctest::Approx(ref[i]).epsilon(1e-4));
  }
}

TEST_CASE("random-measure and Markov constructions agree") {
  {
    const auto rep = exsurv::equivalence_check(1.0, 1.0, 3, {0.5, 1.0, 2.0}, 20000, 1e-7, 31, 4);
    CHECK(rep.max_z_measure_vs_exact < 4.0);
    CHECK(rep.max_z_markov_vs_exact < 4.0);
    CHECK(rep.max_z_distinct < 4.0);
    CHECK(rep.max_z_epsilon_halved < 1.0);
  }
  {
    const auto rep = exsurv::equivalence_check(0.5, 2.0, 1, {0.3, 1.0, 4.0}, 10000, 1e-7, 32, 2);
    CHECK(rep.max_z() < 4.0);
  }
}

TEST_CASE("realization CSV") {
  const exsurv::RandomMeasureRealization m{2.0, 0.0, {{0.5, 0.25}, {1.5, 3.0}}, 1e-3};
  std::ostringstream out;
  exsurv::write_realization_csv(out, m);
  CHECK(out.str() == "location,mass\n0.5,0.25\n1.5,3\n");
}
