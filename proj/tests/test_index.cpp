#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "exsurv/errors.hpp"
#include "exsurv/index.hpp"
#include "exsurv/special.hpp"
#include "oracles.hpp"

using exsurv::CharacteristicIndex;

namespace {

struct Case {
  std::string name;
  CharacteristicIndex index;
  oracle::ZetaFn zeta;
};

std::vector<Case> builtin_cases() {
  return {
      {"harmonic(1,1)", CharacteristicIndex::harmonic(1.0, 1.0), oracle::harmonic(1.0, 1.0)},
      {"harmonic(0.5,21.45)", CharacteristicIndex::harmonic(0.5, 21.45), oracle::harmonic(0.5, 21.45)},
      {"gamma(1,1)", CharacteristicIndex::gamma(1.0, 1.0), oracle::gamma(1.0, 1.0)},
      {"gamma(2,0.3)", CharacteristicIndex::gamma(2.0, 0.3), oracle::gamma(2.0, 0.3)},
      {"power(0.6)", CharacteristicIndex::power(0.6), oracle::power(0.6)},
      {"power(0.9)", CharacteristicIndex::power(0.9), oracle::power(0.9)},
      {"geometric(0.3)", CharacteristicIndex::geometric(0.3), oracle::geometric(0.3)},
      {"beta(2,0.5)", CharacteristicIndex::beta_splitting(2.0, 0.5), oracle::beta_splitting(2.0, 0.5)},
      {"beta(1,-0.5)", CharacteristicIndex::beta_splitting(1.0, -0.5), oracle::beta_splitting(1.0, -0.5)},
      {"beta(1,1)", CharacteristicIndex::beta_splitting(1.0, 1.0), oracle::beta_splitting(1.0, 1.0)},
      {"linear", CharacteristicIndex::linear(), oracle::linear()},
      {"linear-shift(1)", CharacteristicIndex::linear_shift(1.0), oracle::linear_shift(1.0)},
  };
}

constexpr int kCheck = 40;

double rel_err(double got, double ref) { return std::abs(got - ref) / std::abs(ref); }

}  // namespace

TEST_CASE("zeta closed forms") {
  CHECK(CharacteristicIndex::harmonic(1, 1).zeta(3) == doctest::Approx(1.0 + 0.5 + 1.0 / 3.0).epsilon(1e-15));
  CHECK(CharacteristicIndex::gamma(1, 1).zeta(1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (const auto& c : builtin_cases()) {
    CAPTURE(c.name);
    CHECK(c.index.zeta(0) == 0.0);
    CHECK(c.index.zeta(1) > 0.0);
  }
  CHECK_THROWS_AS(CharacteristicIndex::harmonic(1, 1).zeta(-1), exsurv::ParameterError);
}

TEST_CASE("zeta matches extended-precision references") {
  for (const auto& c : builtin_cases()) {
    CAPTURE(c.name);
    for (int n : {1, 2, 5, 17, 40, 64, 65, 100, 500}) {
      CAPTURE(n);
      const double ref = static_cast<double>(c.zeta(n));
      CHECK(c.index.zeta(n) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("lambda_rate examples") {
  CHECK(CharacteristicIndex::harmonic(1, 1).lambda_rate(0, 2) == doctest::Approx(0.5).epsilon(1e-14));
  for (int r : {0, 1, 7}) CHECK(CharacteristicIndex::linear().lambda_rate(r, 2) == 0.0);
  CHECK(CharacteristicIndex::geometric(0.5).lambda_rate(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(CharacteristicIndex::gamma(1, 1).lambda_rate(0, 0), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::gamma(1, 1).lambda_rate(-1, 1), exsurv::ParameterError);
}

TEST_CASE("lambda_rate agrees with the 100-digit alternating sum for every family") {
  for (const auto& c : builtin_cases()) {
    CAPTURE(c.name);
    const auto z = oracle::table(c.zeta, 2 * kCheck + 1);
    for (int r = 0; r <= kCheck; ++r) {
      for (int d = 1; r + d <= kCheck; ++d) {
        CAPTURE(r);
        CAPTURE(d);
        const double ref = static_cast<double>(oracle::lambda(z, r, d));
        const double got = c.index.lambda_rate(r, d);
        if (ref == 0.0 || std::abs(ref) < 1e-300) {
          CHECK(std::abs(got) < 1e-300);
        } else {
          CHECK(rel_err(got, ref) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("stable differences reach high orders where the raw sum fails") {
  const auto gamma = CharacteristicIndex::gamma(1.0, 1.0);
  const auto z = oracle::table(oracle::gamma(1.0, 1.0), 80);
  const double ref = static_cast<double>(oracle::lambda(z, 10, 60));
  CHECK(rel_err(gamma.lambda_rate(10, 60), ref) < 1e-10);
  // The double-precision alternating sum is off by orders of magnitude here.
  CHECK(std::abs(gamma.naive_lambda_rate(10, 60) - ref) > 1e3 * std::abs(ref));
}

TEST_CASE("split_prob examples") {
  for (int r = 0; r < 10; ++r) {
    CHECK(CharacteristicIndex::linear().split_prob(r, 1) == doctest::Approx(1.0 / (r + 1)).epsilon(1e-15));
  }
  // q(n-1, 1) = 1/n^2 is beta-splitting with rho = beta = 1: uniform rule (n-d)! d!/(n n!).
  const auto uniform = CharacteristicIndex::beta_splitting(1.0, 1.0);
  for (int n = 1; n <= 6; ++n) CHECK(uniform.split_prob(n - 1, 1) == doctest::Approx(1.0 / (n * n)).epsilon(1e-13));
  CHECK(uniform.split_prob(2, 2) == doctest::Approx(1.0 / 24.0).epsilon(1e-13));
  CHECK(CharacteristicIndex::harmonic(1, 1).split_prob(0, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("build_table examples") {
  const auto h = exsurv::build_table(CharacteristicIndex::harmonic(1, 1), 2);
  CHECK(h.split_prob(0, 1) == doctest::Approx(1.0));
  CHECK(h.split_prob(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(h.split_prob(0, 2) == doctest::Approx(1.0 / 3.0));

  const auto lin = exsurv::build_table(CharacteristicIndex::linear(), 3);
  for (int n = 1; n <= 3; ++n) {
    CHECK(lin.split_prob(n - 1, 1) == doctest::Approx(1.0 / n));
    for (int d = 2; d <= n; ++d) CHECK(lin.split_prob(n - d, d) == 0.0);
  }

  const auto shift = exsurv::build_table(CharacteristicIndex::linear_shift(1.0), 3);
  for (int n = 2; n <= 3; ++n) {
    CHECK(shift.split_prob(n - 1, 1) == doctest::Approx(1.0 / (n + 1)));
    CHECK(shift.split_prob(0, n) == doctest::Approx(1.0 / (n + 1)));
  }
  CHECK(shift.split_prob(1, 2) == 0.0);
  CHECK_THROWS_AS(exsurv::build_table(CharacteristicIndex::linear(), 0), exsurv::ParameterError);
}

TEST_CASE("normalization and consistency identities") {
  for (const auto& c : builtin_cases()) {
    CAPTURE(c.name);
    const auto table = exsurv::build_table(c.index, kCheck + 1);
    CHECK(exsurv::check_normalization(table, kCheck) < 1e-10);
    CHECK(exsurv::max_consistency_defect(table) < 1e-10);
  }
  const auto beta = exsurv::build_table(CharacteristicIndex::beta_splitting(2.0, 0.5), 12);
  CHECK(exsurv::check_consistency(beta, 10, 3) < 1e-10);
}

TEST_CASE("identity checks detect perturbations") {
  auto table = exsurv::build_table(CharacteristicIndex::harmonic(1, 1), 10);
  CHECK(exsurv::check_normalization(table, 10) < 1e-12);
  table.set(3, 2, 0.0);
  CHECK(exsurv::check_normalization(table, 10) > 1e-3);
  CHECK(exsurv::check_consistency(table, 5, 2) > 1e-3);
}

TEST_CASE("built-in families: probabilities, rates and monotonicity") {
  for (const auto& c : builtin_cases()) {
    CAPTURE(c.name);
    for (int r = 0; r <= kCheck; ++r) {
      for (int d = 1; r + d <= kCheck; ++d) {
        const double q = c.index.split_prob(r, d);
        const double l = c.index.lambda_rate(r, d);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0 + 1e-12);
        CHECK(l >= 0.0);
        const double tol = 1e-12 * l;
        if (r + d + 1 <= kCheck) {
          CHECK(c.index.lambda_rate(r + 1, d) <= l + tol);
          CHECK(c.index.lambda_rate(r, d + 1) <= l + tol);
        }
      }
    }
    for (int n = 0; n < kCheck; ++n) {
      CHECK(c.index.zeta(n + 1) >= c.index.zeta(n));
      CHECK(c.index.lambda_rate(n, 1) > 0.0);
    }
  }
}

TEST_CASE("scaling nu leaves split probabilities unchanged") {
  for (const auto& c : builtin_cases()) {
    CAPTURE(c.name);
    for (double kappa : {0.01, 3.7, 250.0}) {
      const auto scaled = c.index.rescaled(c.index.scale() * kappa);
      for (int r = 0; r <= 12; ++r) {
        for (int d = 1; r + d <= 12; ++d) CHECK(scaled.split_prob(r, d) == c.index.split_prob(r, d));
      }
      CHECK(scaled.zeta(5) == doctest::Approx(kappa * c.index.zeta(5)).epsilon(1e-14));
    }
  }
}

TEST_CASE("gamma differences approach the harmonic form with rho + 1/2") {
  for (double rho : {0.5, 1.0, 4.0}) {
    const auto gamma = CharacteristicIndex::gamma(1.0, rho);
    const auto harmonic = CharacteristicIndex::harmonic(1.0, rho + 0.5);
    for (int t = 10; t <= 200; t += 10) {
      for (int d = 1; d <= 5; ++d) {
        const double g = gamma.lambda_rate(t, d);
        const double h = harmonic.lambda_rate(t, d);
        CAPTURE(rho);
        CAPTURE(t);
        CAPTURE(d);
        CHECK(std::abs(g - h) / h < 5.0 / (t * t));
      }
    }
  }
}

TEST_CASE("weak continuity characterizes the harmonic family") {
  for (double rho : {0.2, 1.0, 21.45}) {
    const auto h = CharacteristicIndex::harmonic(0.7, rho);
    for (int r = 0; r <= 30; ++r) {
      for (int d = 1; r + d <= 30; ++d) CHECK(std::abs(exsurv::weak_continuity_defect(h, r, d)) < 1e-9);
    }
  }
  // Gamma(1,1) at (r, d) = (1, 2): λ(r,2) = 2 log(r+2) - log(r+1) - log(r+3).
  {
    using oracle::Real;
    using boost::multiprecision::log;
    auto lam2 = [](int r) { return 2 * log(Real(r + 2)) - log(Real(r + 1)) - log(Real(r + 3)); };
    auto lam1 = [](int r) { return log(Real(r + 2)) - log(Real(r + 1)); };
    const double expected = static_cast<double>(log(lam2(2) / lam2(1)) - log(lam1(3) / lam1(1)));
    const double got = exsurv::weak_continuity_defect(CharacteristicIndex::gamma(1, 1), 1, 2);
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
    CHECK(std::abs(got) > 1e-4);
  }
  for (const auto& c : builtin_cases()) {
    if (c.index.family() == exsurv::Family::Linear) continue;
    CAPTURE(c.name);
    for (int r = 0; r < 10; ++r) CHECK(exsurv::weak_continuity_defect(c.index, r, 1) == 0.0);
    double largest = 0.0;
    for (int r = 0; r <= 20; ++r) {
      for (int d = 2; r + d <= 20; ++d) {
        const double v = exsurv::weak_continuity_defect(c.index, r, d);
        largest = std::max(largest, std::isfinite(v) ? std::abs(v) : 1.0);
      }
    }
    const bool harmonic_like = c.index.family() == exsurv::Family::Harmonic;
    if (harmonic_like) {
      CHECK(largest < 1e-9);
    } else {
      CHECK(largest > 1e-4);
    }
  }
}

TEST_CASE("beta-splitting closed form against the Gamma-ratio sum") {
  for (double beta : {-0.9, -0.5, -0.1, 0.0, 0.5, 3.0}) {
    for (double rho : {0.3, 1.0, 7.5}) {
      const auto idx = CharacteristicIndex::beta_splitting(rho, beta);
      const auto ref = oracle::beta_splitting(rho, beta);
      for (int n : {1, 3, 64, 65, 300}) {
        CAPTURE(beta);
        CAPTURE(rho);
        CAPTURE(n);
        CHECK(idx.zeta(n) == doctest::Approx(static_cast<double>(ref(n))).epsilon(1e-11));
      }
    }
  }
  // beta = 0 is the harmonic process.
  const auto b0 = CharacteristicIndex::beta_splitting(2.5, 0.0);
  const auto h = CharacteristicIndex::harmonic(1.0, 2.5);
  for (int n = 1; n < 100; n += 7) CHECK(b0.zeta(n) == h.zeta(n));
  CHECK(b0.lambda_rate(3, 4) == h.lambda_rate(3, 4));
}

TEST_CASE("index built from a dislocation measure") {
  const double rho = 2.0;
  // Harmonic dislocation measure x^(ρ-1)/(1-x) dx.
  const auto measure = exsurv::DislocationMeasure::from_density(
      [rho](double x) { return std::pow(x, rho - 1.0) / (1.0 - x); });
  const auto idx = CharacteristicIndex::from_measure(measure, 0.0);
  const auto h = CharacteristicIndex::harmonic(1.0, rho);
  for (int n = 1; n <= 10; ++n) CHECK(idx.zeta(n) == doctest::Approx(h.zeta(n)).epsilon(1e-9));
  for (int d = 1; d <= 12; ++d) CHECK(idx.lambda_rate(3, d) == doctest::Approx(h.lambda_rate(3, d)).epsilon(1e-9));

  // Erosion adds n c to zeta and c to singleton rates.
  const auto eroded = CharacteristicIndex::from_measure(measure, 0.5);
  CHECK(eroded.zeta(4) == doctest::Approx(h.zeta(4) + 2.0).epsilon(1e-9));
  CHECK(eroded.lambda_rate(2, 1) == doctest::Approx(h.lambda_rate(2, 1) + 0.5).epsilon(1e-9));
  CHECK(eroded.lambda_rate(2, 2) == doctest::Approx(h.lambda_rate(2, 2)).epsilon(1e-9));

  // Atomic measure at alpha reproduces the geometric index.
  const auto atomic = CharacteristicIndex::from_measure(exsurv::DislocationMeasure::from_atoms({{0.3, 1.0}}), 0.0);
  const auto geo = CharacteristicIndex::geometric(0.3);
  for (int n = 1; n < 20; ++n) CHECK(atomic.zeta(n) == doctest::Approx(geo.zeta(n)).epsilon(1e-14));
  CHECK(atomic.lambda_rate(4, 3) == doctest::Approx(geo.lambda_rate(4, 3)).epsilon(1e-13));

  // ∫(1-x)(1-x)^-2 dx diverges.
  const auto bad = exsurv::DislocationMeasure::from_density([](double x) { return 1.0 / ((1.0 - x) * (1.0 - x)); });
  CHECK_THROWS_AS(CharacteristicIndex::from_measure(bad, 0.0), exsurv::IntegrabilityError);
  CHECK_THROWS_AS(exsurv::levy_from_dislocation(bad, 0.0), exsurv::IntegrabilityError);
}

TEST_CASE("levy_from_dislocation examples") {
  const double m = 0.8;
  const auto point = exsurv::DislocationMeasure::from_atoms({{std::exp(-1.0), m}});
  const auto levy = exsurv::levy_from_dislocation(point, 0.0);
  REQUIRE(levy.atoms().size() == 1);
  CHECK(levy.atoms()[0].location == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(levy.atoms()[0].mass == doctest::Approx(m));
  const auto idx = CharacteristicIndex::from_measure(point, 0.0);
  for (int n = 1; n <= 10; ++n) CHECK(levy.exponent(n) == doctest::Approx(idx.zeta(n)).epsilon(1e-14));

  const auto drift = exsurv::levy_from_dislocation(exsurv::DislocationMeasure::from_atoms({}), 1.0);
  CHECK(drift.drift() == 1.0);
  CHECK(drift.atoms().empty());
  CHECK(drift.exponent(3.0) == doctest::Approx(3.0));

  for (double rho : {0.5, 1.0, 3.0}) {
    const auto harmonic_measure = exsurv::DislocationMeasure::from_density(
        [rho](double x) { return std::pow(x, rho - 1.0) / (1.0 - x); });
    const auto w = exsurv::levy_from_dislocation(harmonic_measure, 0.0);
    // Lévy density of the harmonic process: e^{-ρz}/(1 - e^{-z}).
    for (double z : {0.01, 0.5, 2.0, 9.0}) {
      CHECK(w.density(z) == doctest::Approx(std::exp(-rho * z) / -std::expm1(-z)).epsilon(1e-12));
    }
    const auto h = CharacteristicIndex::harmonic(1.0, rho);
    for (int n = 1; n <= 10; ++n) {
      CAPTURE(rho);
      CAPTURE(n);
      CHECK(w.exponent(n) == doctest::Approx(h.zeta(n)).epsilon(1e-9));
    }
  }
}

TEST_CASE("dislocation_from_levy inverts levy_from_dislocation") {
  // Density round trip.
  const auto beta_measure = exsurv::DislocationMeasure::from_density(
      [](double x) { return std::pow(x, 0.5) * std::pow(1.0 - x, -0.5); });
  const auto [back, c] = exsurv::dislocation_from_levy(exsurv::levy_from_dislocation(beta_measure, 0.25));
  CHECK(c == 0.25);
  for (double x : {0.05, 0.3, 0.7, 0.99}) {
    CHECK(back.density(x) == doctest::Approx(beta_measure.density(x)).epsilon(1e-8));
  }
  const auto a = CharacteristicIndex::from_measure(beta_measure, 0.25);
  const auto b = CharacteristicIndex::from_measure(back, c);
  for (int n = 1; n <= 8; ++n) CHECK(b.zeta(n) == doctest::Approx(a.zeta(n)).epsilon(1e-8));

  // Atomic round trip, including an atom at zero (killing).
  const auto atoms = exsurv::DislocationMeasure::from_atoms({{0.0, 0.2}, {0.4, 1.5}});
  const auto [atoms_back, c2] = exsurv::dislocation_from_levy(exsurv::levy_from_dislocation(atoms, 0.0));
  CHECK(c2 == 0.0);
  REQUIRE(atoms_back.atoms().size() == 2);
  CHECK(atoms_back.atoms()[0].location == 0.0);
  CHECK(atoms_back.atoms()[1].location == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(atoms_back.atoms()[1].mass == 1.5);

  // Pure drift.
  const auto [none, c3] = exsurv::dislocation_from_levy(exsurv::LevyMeasure(2.0, {}, {}));
  CHECK(c3 == 2.0);
  CHECK(none.atoms().empty());
}

TEST_CASE("records round-trip exactly") {
  const std::vector<CharacteristicIndex> all = {
      CharacteristicIndex::harmonic(0.5292181239161589, 21.445867109587414),
      CharacteristicIndex::gamma(0.53, 20.95),
      CharacteristicIndex::power(0.9, 2.0),
      CharacteristicIndex::linear(),
      CharacteristicIndex::linear_shift(1.0),
      CharacteristicIndex::geometric(0.3),
      CharacteristicIndex::beta_splitting(1.0, -0.5),
  };
  for (const auto& idx : all) {
    const auto back = CharacteristicIndex::from_record(idx.to_record());
    CHECK(back.to_record() == idx.to_record());
    CHECK(back.zeta(7) == idx.zeta(7));
  }
  CHECK(CharacteristicIndex::from_record("harmonic rho=21.45 nu=0.53").to_record() == "harmonic nu=0.53 rho=21.45");
  CHECK_THROWS_AS(CharacteristicIndex::from_record("harmonic nu=1"), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::from_record("cauchy rho=1"), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::from_record("gamma rho=abc"), exsurv::ParameterError);
}

TEST_CASE("parameter domains") {
  CHECK_THROWS_AS(CharacteristicIndex::harmonic(0.0, 1.0), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::harmonic(1.0, -1.0), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::power(1.0), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::geometric(0.0), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::beta_splitting(1.0, -1.0), exsurv::ParameterError);
  CHECK_THROWS_AS(CharacteristicIndex::linear_shift(-0.1), exsurv::ParameterError);
}
