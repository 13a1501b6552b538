#include "exsurv/index.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "exsurv/errors.hpp"
#include "exsurv/text.hpp"

namespace exsurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
// The raw alternating sum is abandoned once its rounding error could exceed
// this fraction of the result.
constexpr double kMaxCancellation = 1e-12;
// Direct harmonic sums are used up to this many terms.
constexpr int kDirectSumTerms = 64;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

// ∫ (1 - x) dislocation(dx), which must be finite.
double dislocation_tail(const DislocationMeasure& dislocation) {
  double tail = 0.0;
  try {
    tail = dislocation.integrate([](double x) { return 1.0 - x; });
  } catch (const NumericError& e) {
    throw IntegrabilityError(std::string("∫(1-x) dislocation(dx) did not converge: ") + e.what());
  }
  if (!std::isfinite(tail)) throw IntegrabilityError("∫(1-x) dislocation(dx) is not finite");
  return tail;
}

double harmonic_shape_zeta(double rho, int n) {
  if (n <= kDirectSumTerms) {
    double s = 0.0;
    for (int j = n - 1; j >= 0; --j) s += 1.0 / (rho + j);
    return s;
  }
  return digamma(n + rho) - digamma(rho);
}

// log of Π_{j<n} (ρ+j)/(ρ+β+j) = Γ(ρ+n)Γ(ρ+β) / (Γ(ρ)Γ(ρ+β+n)).
double log_ascending_ratio(double rho, double beta, int n) {
  if (n <= kDirectSumTerms) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::log1p(-beta / (rho + beta + j));
    return s;
  }
  return log_gamma_delta_ratio(rho + n, beta) - log_gamma_delta_ratio(rho, beta);
}

// log ∫_0^∞ e^{-a z} (1 - e^{-z})^d z^{-1-s} dz.
double log_levy_difference(double a, int d, double s) {
  return log_integrate_half_line([=](double z) {
    return -a * z + d * std::log(-std::expm1(-z)) - (1.0 + s) * std::log(z);
  });
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Harmonic: return "harmonic";
    case Family::Gamma: return "gamma";
    case Family::Power: return "power";
    case Family::Linear: return "linear";
    case Family::LinearShift: return "linear-shift";
    case Family::Geometric: return "geometric";
    case Family::BetaSplitting: return "beta";
    case Family::FromMeasure: return "from-measure";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Measures

DislocationMeasure DislocationMeasure::from_density(std::function<double(double)> density) {
  require(static_cast<bool>(density), "dislocation density must be callable");
  DislocationMeasure m;
  m.density_ = std::move(density);
  return m;
}

DislocationMeasure DislocationMeasure::from_atoms(std::vector<Atom> atoms) {
  for (const auto& a : atoms) {
    require(a.location >= 0.0 && a.location < 1.0, "dislocation atoms must lie in [0, 1)");
    require(a.mass > 0.0, "dislocation atom masses must be positive");
  }
  DislocationMeasure m;
  m.atoms_ = std::move(atoms);
  return m;
}

double DislocationMeasure::integrate(const std::function<double(double)>& f,
                                     const QuadratureOptions& opts) const {
  if (density_) {
    return integrate_unit_interval([&](double x) { return f(x) * density_(x); }, opts);
  }
  double s = 0.0;
  for (const auto& a : atoms_) s += f(a.location) * a.mass;
  return s;
}

LevyMeasure::LevyMeasure(double drift, std::function<double(double)> density, std::vector<Atom> atoms)
    : drift_(drift), density_(std::move(density)), atoms_(std::move(atoms)) {
  require(drift_ >= 0.0, "Levy drift must be non-negative");
  for (const auto& a : atoms_) {
    require(a.location > 0.0, "Levy atoms must lie in (0, inf]");
    require(a.mass > 0.0, "Levy atom masses must be positive");
  }
}

double LevyMeasure::exponent(double t) const {
  double psi = drift_ * t;
  if (density_) {
    psi += integrate_half_line([&](double z) {
      if (z <= 0.0) return 0.0;
      // Near z = 0 the density may round to x/0 while the integrand stays bounded.
      const double v = -std::expm1(-z * t) * density_(z);
      return std::isfinite(v) ? v : 0.0;
    });
  }
  for (const auto& a : atoms_) {
    psi += (std::isinf(a.location) ? 1.0 : -std::expm1(-a.location * t)) * a.mass;
  }
  return psi;
}

LevyMeasure levy_from_dislocation(const DislocationMeasure& dislocation, double erosion) {
  require(erosion >= 0.0, "erosion coefficient must be non-negative");
  dislocation_tail(dislocation);

  std::vector<Atom> atoms;
  for (const auto& a : dislocation.atoms()) {
    atoms.push_back({a.location == 0.0 ? kInf : -std::log(a.location), a.mass});
  }
  std::function<double(double)> density;
  if (!dislocation.is_atomic()) {
    // Pushforward under x -> -log x: density picks up the Jacobian e^{-z}.
    density = [dislocation](double z) { return std::exp(-z) * dislocation.density(std::exp(-z)); };
  }
  return LevyMeasure(erosion, std::move(density), std::move(atoms));
}

std::pair<DislocationMeasure, double> dislocation_from_levy(const LevyMeasure& levy) {
  if (levy.has_density()) {
    LevyMeasure copy = levy;
    auto density = [copy](double x) {
      if (x <= 0.0) return 0.0;
      return copy.density(-std::log(x)) / x;
    };
    return {DislocationMeasure::from_density(std::move(density)), levy.drift()};
  }
  std::vector<Atom> atoms;
  for (const auto& a : levy.atoms()) {
    atoms.push_back({std::isinf(a.location) ? 0.0 : std::exp(-a.location), a.mass});
  }
  return {DislocationMeasure::from_atoms(std::move(atoms)), levy.drift()};
}

// ---------------------------------------------------------------------------
// CharacteristicIndex

CharacteristicIndex::CharacteristicIndex(Shape shape, double nu) : shape_(std::move(shape)), nu_(nu) {
  require(nu_ > 0.0 && std::isfinite(nu_), "scale nu must be positive and finite");
}

CharacteristicIndex CharacteristicIndex::harmonic(double nu, double rho) {
  require(rho > 0.0 && std::isfinite(rho), "harmonic: rho must be positive");
  return {family::Harmonic{rho}, nu};
}

CharacteristicIndex CharacteristicIndex::gamma(double nu, double rho) {
  require(rho > 0.0 && std::isfinite(rho), "gamma: rho must be positive");
  return {family::Gamma{rho}, nu};
}

CharacteristicIndex CharacteristicIndex::power(double alpha, double nu) {
  require(alpha > 0.0 && alpha < 1.0, "power: alpha must lie in (0, 1)");
  return {family::Power{alpha}, nu};
}

CharacteristicIndex CharacteristicIndex::linear(double nu) { return {family::Linear{}, nu}; }

CharacteristicIndex CharacteristicIndex::linear_shift(double rho, double nu) {
  require(rho >= 0.0 && std::isfinite(rho), "linear-shift: rho must be non-negative");
  return {family::LinearShift{rho}, nu};
}

CharacteristicIndex CharacteristicIndex::geometric(double alpha, double nu) {
  require(alpha > 0.0 && alpha < 1.0, "geometric: alpha must lie in (0, 1)");
  return {family::Geometric{alpha}, nu};
}

CharacteristicIndex CharacteristicIndex::beta_splitting(double rho, double beta, double nu) {
  require(rho > 0.0 && std::isfinite(rho), "beta: rho must be positive");
  require(beta > -1.0 && std::isfinite(beta), "beta: beta must exceed -1");
  return {family::BetaSplitting{rho, beta}, nu};
}

CharacteristicIndex CharacteristicIndex::from_measure(DislocationMeasure dislocation, double erosion,
                                                      double nu) {
  require(erosion >= 0.0, "erosion coefficient must be non-negative");
  const double tail = dislocation_tail(dislocation);
  require(tail + erosion > 0.0, "measure generates zeta_1 = 0");
  return {family::FromMeasure{std::move(dislocation), erosion}, nu};
}

Family CharacteristicIndex::family() const {
  return std::visit(Overloaded{
                        [](const family::Harmonic&) { return Family::Harmonic; },
                        [](const family::Gamma&) { return Family::Gamma; },
                        [](const family::Power&) { return Family::Power; },
                        [](const family::Linear&) { return Family::Linear; },
                        [](const family::LinearShift&) { return Family::LinearShift; },
                        [](const family::Geometric&) { return Family::Geometric; },
                        [](const family::BetaSplitting&) { return Family::BetaSplitting; },
                        [](const family::FromMeasure&) { return Family::FromMeasure; },
                    },
                    shape_);
}

CharacteristicIndex CharacteristicIndex::rescaled(double nu) const { return {shape_, nu}; }

double CharacteristicIndex::shape_zeta(int n) const {
  if (n < 0) throw ParameterError("zeta: n must be non-negative");
  if (n == 0) return 0.0;
  return std::visit(
      Overloaded{
          [n](const family::Harmonic& f) { return harmonic_shape_zeta(f.rho, n); },
          [n](const family::Gamma& f) { return std::log1p(n / f.rho); },
          [n](const family::Power& f) { return std::pow(static_cast<double>(n), f.alpha); },
          [n](const family::Linear&) { return static_cast<double>(n); },
          [n](const family::LinearShift& f) { return n + f.rho; },
          [n](const family::Geometric& f) { return -std::expm1(n * std::log(f.alpha)); },
          [n](const family::BetaSplitting& f) {
            if (f.beta == 0.0) return harmonic_shape_zeta(f.rho, n);
            // Increments are B(ρ+j, β+1); sum them while ρ+β+j <= 0.
            double head = 0.0;
            double rho = f.rho;
            int m = n;
            while (m > 0 && rho + f.beta <= 0.0) {
              head += std::exp(log_beta(rho, f.beta + 1.0));
              rho += 1.0;
              --m;
            }
            if (m == 0) return head;
            // B(ρ,β) - B(ρ+m,β) = Γ(β) Γ(ρ)/Γ(ρ+β) (1 - ratio_m); also valid for β < 0.
            const double b = boost::math::tgamma(f.beta) * std::exp(log_gamma_delta_ratio(rho, f.beta));
            return head + b * -std::expm1(log_ascending_ratio(rho, f.beta, m));
          },
          [n](const family::FromMeasure& f) {
            const double integral = f.dislocation.integrate(
                [n](double x) { return x <= 0.0 ? 1.0 : -std::expm1(n * std::log(x)); });
            return integral + n * f.erosion;
          },
      },
      shape_);
}

double CharacteristicIndex::naive_lambda_rate(int r, int d) const {
  if (r < 0 || d < 1) throw ParameterError("lambda: need r >= 0 and d >= 1");
  // Σ_j (-1)^(d-j) C(d,j) (zeta_{r+j} - zeta_r), times (-1)^(d-1).
  const double base = shape_zeta(r);
  double s = 0.0;
  for (int j = 1; j <= d; ++j) {
    const double term = binomial(d, j) * (shape_zeta(r + j) - base);
    s += ((d - j) % 2 == 0) ? term : -term;
  }
  return nu_ * ((d - 1) % 2 == 0 ? s : -s);
}

double CharacteristicIndex::log_shape_lambda(int r, int d) const {
  if (r < 0 || d < 1) throw ParameterError("lambda: need r >= 0 and d >= 1");

  // Alternating sum when it is short and well conditioned; NaN otherwise.
  auto trusted_naive = [&](auto&& delta) -> double {
    if (d > kNaiveDifferenceMaxOrder) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    double magnitude = 0.0;
    for (int j = 1; j <= d; ++j) {
      const double term = binomial(d, j) * delta(j);
      magnitude += std::abs(term);
      s += ((j - 1) % 2 == 0) ? term : -term;
    }
    if (s <= 0.0 || magnitude * 4.0 * kEps > kMaxCancellation * s) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return std::log(s);
  };

  return std::visit(
      Overloaded{
          [&](const family::Harmonic& f) { return log_beta(d, f.rho + r); },
          [&](const family::Gamma& f) {
            const double a = f.rho + r;
            const double naive = trusted_naive([a](int j) { return std::log1p(j / a); });
            if (!std::isnan(naive)) return naive;
            return log_levy_difference(a, d, 0.0);
          },
          [&](const family::Power& f) {
            const double base = std::pow(static_cast<double>(r), f.alpha);
            const double naive = trusted_naive(
                [&](int j) { return std::pow(static_cast<double>(r + j), f.alpha) - base; });
            if (!std::isnan(naive)) return naive;
            // n^α = α/Γ(1-α) ∫ (1 - e^{-nz}) z^{-1-α} dz.
            const double log_c = std::log(f.alpha) - boost::math::lgamma(1.0 - f.alpha);
            return log_c + log_levy_difference(r, d, f.alpha);
          },
          [&](const family::Linear&) { return d == 1 ? 0.0 : -kInf; },
          [&](const family::LinearShift& f) {
            if (d == 1) return r == 0 ? std::log1p(f.rho) : 0.0;
            return r == 0 ? std::log(f.rho) : -kInf;
          },
          [&](const family::Geometric& f) { return r * std::log(f.alpha) + d * std::log1p(-f.alpha); },
          [&](const family::BetaSplitting& f) {
            if (f.beta == 0.0) return log_beta(d, f.rho + r);
            return log_beta(f.rho + r, f.beta + d);
          },
          [&](const family::FromMeasure& f) {
            // The integral form has no cancellation, so it is always used.
            const double integral = f.dislocation.integrate([r, d](double x) {
              if (x <= 0.0) return r == 0 ? 1.0 : 0.0;
              return std::exp(r * std::log(x) + d * std::log1p(-x));
            });
            const double total = integral + (d == 1 ? f.erosion : 0.0);
            return total > 0.0 ? std::log(total) : -kInf;
          },
      },
      shape_);
}

double CharacteristicIndex::zeta(int n) const { return nu_ * shape_zeta(n); }

double CharacteristicIndex::standardized_zeta(int n) const { return shape_zeta(n) / shape_zeta(1); }

double CharacteristicIndex::log_lambda_rate(int r, int d) const {
  return std::log(nu_) + log_shape_lambda(r, d);
}

double CharacteristicIndex::lambda_rate(int r, int d) const { return nu_ * std::exp(log_shape_lambda(r, d)); }

double CharacteristicIndex::log_split_prob(int r, int d) const {
  if (r < 0 || d < 1) throw ParameterError("split_prob: need r >= 0 and d >= 1");
  return log_shape_lambda(r, d) - std::log(shape_zeta(r + d));
}

double CharacteristicIndex::split_prob(int r, int d) const { return std::exp(log_split_prob(r, d)); }

std::string CharacteristicIndex::to_record() const {
  std::ostringstream os;
  os << family_name(family()) << " nu=" << format_exact(nu_);
  std::visit(Overloaded{
                 [&](const family::Harmonic& f) { os << " rho=" << format_exact(f.rho); },
                 [&](const family::Gamma& f) { os << " rho=" << format_exact(f.rho); },
                 [&](const family::Power& f) { os << " alpha=" << format_exact(f.alpha); },
                 [&](const family::Linear&) {},
                 [&](const family::LinearShift& f) { os << " rho=" << format_exact(f.rho); },
                 [&](const family::Geometric& f) { os << " alpha=" << format_exact(f.alpha); },
                 [&](const family::BetaSplitting& f) {
                   os << " rho=" << format_exact(f.rho) << " beta=" << format_exact(f.beta);
                 },
                 [&](const family::FromMeasure&) {
                   throw ParameterError("from-measure indices have no text record");
                 },
             },
             shape_);
  return os.str();
}

CharacteristicIndex CharacteristicIndex::from_record(std::string_view record) {
  std::istringstream is{std::string(record)};
  std::string name;
  if (!(is >> name)) throw ParameterError("empty index record");
  std::map<std::string, double> params;
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ParameterError("malformed parameter '" + token + "'");
    try {
      params[token.substr(0, eq)] = parse_double(token.substr(eq + 1));
    } catch (const DataError& e) {
      throw ParameterError(e.what());
    }
  }
  auto get = [&](const std::string& key) {
    const auto it = params.find(key);
    if (it == params.end()) throw ParameterError(name + ": missing parameter " + key);
    return it->second;
  };
  const double nu = params.count("nu") ? params.at("nu") : 1.0;
  if (name == "harmonic") return harmonic(nu, get("rho"));
  if (name == "gamma") return gamma(nu, get("rho"));
  if (name == "power") return power(get("alpha"), nu);
  if (name == "linear") return linear(nu);
  if (name == "linear-shift") return linear_shift(get("rho"), nu);
  if (name == "geometric") return geometric(get("alpha"), nu);
  if (name == "beta") return beta_splitting(get("rho"), get("beta"), nu);
  throw ParameterError("unknown family '" + name + "'");
}

// ---------------------------------------------------------------------------
// Tables and identity checks

SplittingRuleTable::SplittingRuleTable(int max_n, Eigen::MatrixXd q) : max_n_(max_n), q_(std::move(q)) {
  require(max_n_ >= 1, "table: max_n must be at least 1");
  require(q_.rows() == max_n_ + 1 && q_.cols() == max_n_ + 1, "table: matrix must be (max_n+1)^2");
}

double SplittingRuleTable::log_split_prob(int r, int d) const { return std::log(q_(r, d)); }

SplittingRuleTable build_table(const CharacteristicIndex& index, int max_n) {
  require(max_n >= 1, "build_table: max_n must be at least 1");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(max_n + 1, max_n + 1);
  for (int n = 1; n <= max_n; ++n) {
    for (int d = 1; d <= n; ++d) {
      const double v = index.split_prob(n - d, d);
      if (!std::isfinite(v)) {
        throw NumericError("non-finite split probability at (r, d) = (" + std::to_string(n - d) +
                           ", " + std::to_string(d) + ")");
      }
      q(n - d, d) = v;
    }
  }
  return SplittingRuleTable(max_n, std::move(q));
}

double check_normalization(const SplittingRuleTable& table, int n) {
  require(n >= 1 && n <= table.max_n(), "check_normalization: n outside the table");
  double worst = 0.0;
  for (int m = 1; m <= n; ++m) {
    double s = 0.0;
    for (int d = 1; d <= m; ++d) s += binomial(m, d) * table.split_prob(m - d, d);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double check_consistency(const SplittingRuleTable& table, int n, int d) {
  require(d >= 1 && n >= d && n + 1 <= table.max_n(), "check_consistency: (n, d) outside the table");
  const double lhs = (1.0 - table.split_prob(n, 1)) * table.split_prob(n - d, d);
  const double rhs = table.split_prob(n - d, d + 1) + table.split_prob(n - d + 1, d);
  return std::abs(lhs - rhs);
}

double max_consistency_defect(const SplittingRuleTable& table) {
  double worst = 0.0;
  for (int n = 1; n + 1 <= table.max_n(); ++n) {
    for (int d = 1; d <= n; ++d) worst = std::max(worst, check_consistency(table, n, d));
  }
  return worst;
}

double weak_continuity_defect(const CharacteristicIndex& index, int r, int d) {
  const double tied = index.log_lambda_rate(r + 1, d) - index.log_lambda_rate(r, d);
  const double singles = index.log_lambda_rate(r + d, 1) - index.log_lambda_rate(r, 1);
  return tied - singles;
}

}  // namespace exsurv
