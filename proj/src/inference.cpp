#include "exsurv/inference.hpp"

#include <boost/math/tools/roots.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "exsurv/errors.hpp"
#include "exsurv/stats.hpp"
#include "exsurv/text.hpp"
#include "json.hpp"

namespace exsurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Range of log ρ searched for interval endpoints and moment roots.
constexpr double kLogRhoFar = 20.0;

// x in [lo, hi] maximizing f, to width tol.
double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Root of a sign-changing f on [a, b].
double bracketed_root(const std::function<double(double)>& f, double a, double b) {
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

double hazard_one(const ModelFamily& family, double rho) { return family.at(rho).zeta(1); }

}  // namespace

int Dataset::deaths() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [](const Record& r) { return r.failed; }));
}

RiskSetTrajectory to_trajectory(const Dataset& data) {
  std::map<double, std::pair<int, int>> by_time;
  for (const auto& r : data.records) {
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw DataError("times must be positive and finite");
    auto& slot = by_time[r.time];
    (r.failed ? slot.first : slot.second) += 1;
  }
  std::vector<Event> events;
  events.reserve(by_time.size());
  for (const auto& [t, counts] : by_time) events.push_back({t, counts.first, counts.second});
  return RiskSetTrajectory(data.size(), std::move(events));
}

Dataset gehan_dataset() {
  const std::vector<std::pair<double, bool>> raw = {
      {6, true},   {6, true},   {6, true},   {6, false},  {7, true},   {9, false},  {10, true},
      {10, false}, {11, false}, {13, true},  {16, true},  {17, false}, {19, false}, {20, false},
      {22, true},  {23, true},  {25, false}, {32, false}, {32, false}, {34, false}, {35, false}};
  Dataset d;
  d.unit = "weeks";
  for (const auto& [t, f] : raw) d.records.push_back({t, f});
  return d;
}

Dataset read_dataset(std::istream& in, std::string unit) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Dataset d;
  d.unit = std::move(unit);
  std::istringstream lines(text);
  std::string first;
  while (std::getline(lines, first) && trim(first).empty()) {
  }
  if (trim(first) == "time,status") {
    std::string line;
    int lineno = 1;
    while (std::getline(lines, line)) {
      ++lineno;
      const auto row = trim(line);
      if (row.empty()) continue;
      const auto comma = row.find(',');
      if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
        throw DataError("line " + std::to_string(lineno) + ": expected time,status");
      }
      const double t = parse_double(trim(row.substr(0, comma)));
      const auto status = trim(row.substr(comma + 1));
      if (status != "0" && status != "1") throw DataError("line " + std::to_string(lineno) + ": status must be 0 or 1");
      d.records.push_back({t, status == "1"});
    }
  } else {
    std::string token;
    for (char c : text) {
      if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
        token += ' ';
      } else {
        token += c;
      }
    }
    std::istringstream words(token);
    std::string w;
    while (words >> w) {
      const bool censored = w.back() == '*';
      if (censored) w.pop_back();
      d.records.push_back({parse_double(w), !censored});
    }
  }
  for (const auto& r : d.records) {
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw DataError("times must be positive and finite");
  }
  return d;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "time,status\n";
  for (const auto& r : data.records) out << format_exact(r.time) << ',' << (r.failed ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------

ModelFamily ModelFamily::harmonic() { return {Family::Harmonic, 0.0}; }
ModelFamily ModelFamily::gamma() { return {Family::Gamma, 0.0}; }
ModelFamily ModelFamily::linear_shift() { return {Family::LinearShift, 0.0}; }
ModelFamily ModelFamily::beta_splitting(double beta) {
  if (!(beta > -1.0)) throw ParameterError("beta must exceed -1");
  return {Family::BetaSplitting, beta};
}

ModelFamily ModelFamily::from_name(const std::string& name) {
  if (name == "harmonic") return harmonic();
  if (name == "gamma") return gamma();
  if (name == "linear-shift") return linear_shift();
  throw ParameterError("no one-parameter family named '" + name + "'");
}

CharacteristicIndex ModelFamily::at(double rho, double nu) const {
  switch (family_) {
    case Family::Harmonic: return CharacteristicIndex::harmonic(nu, rho);
    case Family::Gamma: return CharacteristicIndex::gamma(nu, rho);
    case Family::LinearShift: return CharacteristicIndex::linear_shift(rho, nu);
    case Family::BetaSplitting: return CharacteristicIndex::beta_splitting(rho, beta_, nu);
    default: break;
  }
  throw ParameterError("unsupported family");
}

std::string ModelFamily::name() const {
  std::string s(family_name(family_));
  if (family_ == Family::BetaSplitting) s += "(beta=" + format_sig6(beta_) + ")";
  return s;
}

// ---------------------------------------------------------------------------

SufficientStats sufficient_stats(const RiskSetTrajectory& traj, const ModelFamily& family, double rho) {
  const auto index = family.at(rho);
  SufficientStats s{0, 0.0, 0.0, 0, 0.0};
  int at_risk = traj.n0();
  double prev = 0.0;
  for (const auto& e : traj.events()) {
    const double dt = e.time - prev;
    if (at_risk > 0) {
      s.int_psi += index.zeta(at_risk) * dt;
      s.total_risk_time += at_risk * dt;
    }
    if (e.failures > 0) {
      ++s.k;
      s.n_deaths += e.failures;
      s.sum_log_lambda += index.log_lambda_rate(at_risk - e.failures, e.failures);
    }
    at_risk -= e.failures + e.censored;
    prev = e.time;
  }
  if (at_risk != 0) throw DataError("every record must end in a failure or a censoring");
  return s;
}

SufficientStats sufficient_stats(const Dataset& data, const ModelFamily& family, double rho) {
  return sufficient_stats(to_trajectory(data), family, rho);
}

namespace {

double loglik_from(const SufficientStats& s, double nu) {
  return (s.k > 0 ? s.k * std::log(nu) : 0.0) - nu * s.int_psi + s.sum_log_lambda;
}

double profile_from(const SufficientStats& s) {
  if (s.k == 0) throw DataError("no failures: nu cannot be estimated");
  return loglik_from(s, s.k / s.int_psi);
}

}  // namespace

double loglik(const Dataset& data, const ModelFamily& family, double rho, double nu) {
  if (!(nu > 0.0)) throw ParameterError("nu must be positive");
  return loglik_from(sufficient_stats(data, family, rho), nu);
}

double mle_nu_given_rho(const Dataset& data, const ModelFamily& family, double rho) {
  const auto s = sufficient_stats(data, family, rho);
  if (s.k == 0) throw DataError("no failures: nu cannot be estimated");
  return s.k / s.int_psi;
}

double profile_loglik(const Dataset& data, const ModelFamily& family, double rho) {
  return profile_from(sufficient_stats(data, family, rho));
}

std::pair<double, double> likelihood_interval(const std::function<double(double)>& profile, double center,
                                              double lmax, double level, double lo, double hi) {
  const double q = stats::chi_square_quantile(level);
  auto excess = [&](double x) { return 2.0 * (lmax - profile(x)) - q; };
  auto endpoint = [&](double dir, double limit) {
    double inner = center;
    double step = 0.25;
    for (;;) {
      const double outer = std::clamp(inner + dir * step, std::min(lo, hi), std::max(lo, hi));
      const double v = excess(outer);
      if (std::isnan(v)) throw NumericError("profile is NaN at " + format_sig6(outer));
      if (v > 0.0) return dir < 0 ? bracketed_root(excess, outer, inner) : bracketed_root(excess, inner, outer);
      if (outer == limit) return dir * kInf;
      inner = outer;
      step *= 1.5;
    }
  };
  return {endpoint(-1.0, lo), endpoint(1.0, hi)};
}

std::pair<double, double> profile_ci(const Dataset& data, const ModelFamily& family, const FitResult& fit,
                                     double level) {
  const auto traj = to_trajectory(data);
  auto prof = [&](double x) { return profile_from(sufficient_stats(traj, family, std::exp(x))); };
  return likelihood_interval(prof, std::log(fit.rho_hat), fit.loglik, level, -kLogRhoFar, kLogRhoFar);
}

FitResult fit_mle(const Dataset& data, const ModelFamily& family, const FitOptions& opts) {
  const auto traj = to_trajectory(data);
  if (traj.total_failures() == 0) throw DataError("no failures: nu cannot be estimated");
  auto stats_at = [&](double log_rho) { return sufficient_stats(traj, family, std::exp(log_rho)); };
  auto prof = [&](double x) { return profile_from(stats_at(x)); };

  FitResult fit{};
  fit.method = FitMethod::Mle;
  fit.family = family.name();
  fit.se_log_nu_information = 1.0 / std::sqrt(static_cast<double>(traj.failure_epochs()));
  double x_hat;
  if (opts.fixed_rho) {
    if (!(*opts.fixed_rho > 0.0)) throw ParameterError("fixed rho must be positive");
    fit.fixed_rho = true;
    x_hat = std::log(*opts.fixed_rho);
  } else {
    if (opts.grid_points < 3 || !(opts.log_rho_hi > opts.log_rho_lo)) throw ParameterError("bad profile grid");
    const int m = opts.grid_points;
    const double h = (opts.log_rho_hi - opts.log_rho_lo) / (m - 1);
    std::vector<double> xs(m);
    std::vector<double> ls(m);
    for (int i = 0; i < m; ++i) {
      xs[i] = opts.log_rho_lo + i * h;
      ls[i] = prof(xs[i]);
      fit.profile.push_back({std::exp(xs[i]), ls[i]});
    }
    const int best = static_cast<int>(std::max_element(ls.begin(), ls.end()) - ls.begin());
    fit.boundary_warning = best == 0 || best == m - 1;
    x_hat = golden_max(prof, xs[std::max(best - 1, 0)], xs[std::min(best + 1, m - 1)], opts.tol);
  }

  const auto s = stats_at(x_hat);
  fit.rho_hat = std::exp(x_hat);
  fit.nu_hat = s.k / s.int_psi;
  fit.loglik = loglik_from(s, fit.nu_hat);

  const double h = opts.hessian_step;
  const double y_hat = std::log(fit.nu_hat);
  if (fit.fixed_rho) {
    auto l = [&](double y) { return loglik_from(s, std::exp(y)); };
    const double d2 = (l(y_hat + h) - 2.0 * fit.loglik + l(y_hat - h)) / (h * h);
    fit.se_log_nu = std::sqrt(-1.0 / d2);
    fit.se_rho = kNaN;
  } else {
    auto l = [&](double x, double y) { return loglik_from(stats_at(x), std::exp(y)); };
    Eigen::Matrix2d hess;
    hess(0, 0) = (l(x_hat + h, y_hat) - 2.0 * fit.loglik + l(x_hat - h, y_hat)) / (h * h);
    hess(1, 1) = (l(x_hat, y_hat + h) - 2.0 * fit.loglik + l(x_hat, y_hat - h)) / (h * h);
    hess(0, 1) = hess(1, 0) = (l(x_hat + h, y_hat + h) - l(x_hat + h, y_hat - h) - l(x_hat - h, y_hat + h) +
                               l(x_hat - h, y_hat - h)) /
                              (4.0 * h * h);
    const Eigen::Matrix2d cov = (-hess).inverse();
    if (!(cov(0, 0) > 0.0) || !(cov(1, 1) > 0.0)) {
      fit.se_rho = kNaN;
      fit.se_log_nu = kNaN;
    } else {
      fit.se_rho = fit.rho_hat * std::sqrt(cov(0, 0));
      fit.se_log_nu = std::sqrt(cov(1, 1));
    }
  }
  fit.se_nu = fit.nu_hat * fit.se_log_nu;

  fit.ci_level = opts.ci_level;
  if (fit.fixed_rho) {
    fit.ci_log_rho = {x_hat, x_hat};
  } else {
    fit.ci_log_rho = likelihood_interval(prof, x_hat, fit.loglik, opts.ci_level, -kLogRhoFar, kLogRhoFar);
  }
  return fit;
}

FitResult fit_moment(const Dataset& data, const ModelFamily& family, const FitOptions& opts) {
  const auto traj = to_trajectory(data);
  if (traj.total_failures() == 0) throw DataError("no failures: nu cannot be estimated");
  auto stats_at = [&](double log_rho) { return sufficient_stats(traj, family, std::exp(log_rho)); };
  const auto s0 = stats_at(0.0);
  const double death_rate = s0.n_deaths / s0.total_risk_time;

  FitResult fit{};
  fit.method = FitMethod::Moment;
  fit.family = family.name();
  fit.se_log_nu_information = 1.0 / std::sqrt(static_cast<double>(s0.k));
  fit.se_rho = fit.se_nu = fit.se_log_nu = kNaN;

  double x;
  if (opts.fixed_rho) {
    // Only ν is free: match the death rate directly.
    fit.fixed_rho = true;
    x = std::log(*opts.fixed_rho);
    fit.rho_hat = *opts.fixed_rho;
    fit.nu_hat = death_rate / hazard_one(family, fit.rho_hat);
  } else {
    // Alternate ν = k / int_psi(ρ) with the death-rate equation solved for ρ.
    auto rho_step = [&](double nu) -> std::optional<double> {
      auto g = [&](double y) { return std::log(nu * hazard_one(family, std::exp(y))) - std::log(death_rate); };
      const double a = -kLogRhoFar;
      const double b = kLogRhoFar;
      const double ga = g(a);
      const double gb = g(b);
      if (!(ga * gb < 0.0)) return std::nullopt;
      return bracketed_root(g, a, b);
    };
    x = 0.0;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
      const auto s = stats_at(x);
      const auto next = rho_step(s.k / s.int_psi);
      if (!next) break;
      const double dx = *next - x;
      x = *next;
      if (std::abs(dx) < 1e-8) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      // Joint equation k Ψ_ρ(1) / int_psi(ρ) = deaths / risk time.
      auto h = [&](double y) {
        const auto s = stats_at(y);
        return std::log(s.k * hazard_one(family, std::exp(y)) / s.int_psi) - std::log(death_rate);
      };
      const int m = 200;
      double prev_x = -kLogRhoFar;
      double prev_h = h(prev_x);
      bool found = false;
      for (int i = 1; i <= m && !found; ++i) {
        const double y = -kLogRhoFar + 2.0 * kLogRhoFar * i / m;
        const double hy = h(y);
        if (prev_h * hy <= 0.0) {
          x = bracketed_root(h, prev_x, y);
          found = true;
        }
        prev_x = y;
        prev_h = hy;
      }
      if (!found) throw ConvergenceError("moment equation has no root for this family and data");
    }
    const auto s = stats_at(x);
    fit.rho_hat = std::exp(x);
    fit.nu_hat = s.k / s.int_psi;
  }
  fit.loglik = loglik_from(stats_at(x), fit.nu_hat);
  fit.ci_level = 0.0;
  fit.ci_log_rho = {kNaN, kNaN};
  return fit;
}

// ---------------------------------------------------------------------------

double KaplanMeier::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KaplanMeier kaplan_meier(const Dataset& data) {
  const auto traj = to_trajectory(data);
  KaplanMeier km;
  int at_risk = traj.n0();
  double s = 1.0;
  for (const auto& e : traj.events()) {
    if (e.failures > 0) {
      s *= static_cast<double>(at_risk - e.failures) / at_risk;
      km.times.push_back(e.time);
      km.survival.push_back(s);
    }
    at_risk -= e.failures + e.censored;
  }
  return km;
}

double ExponentialFit::survival(double t) const { return t <= 0.0 ? 1.0 : std::exp(-rate * t); }

ExponentialFit exponential_fit(const Dataset& data) {
  double risk = 0.0;
  for (const auto& r : data.records) risk += r.time;
  const int deaths = data.deaths();
  if (deaths == 0) throw DataError("no failures: the exponential rate is zero");
  return {deaths / risk, risk / deaths};
}

EmpiricalBayesCurve empirical_bayes_curve(const Dataset& data, const ModelFamily& family, const FitResult& fit,
                                          const std::vector<double>& t_grid) {
  const auto index = family.at(fit.rho_hat, fit.nu_hat);
  const Predictive pred(to_trajectory(data), index);
  EmpiricalBayesCurve c{t_grid, {}, index.zeta(1), 1.0 / index.zeta(1)};
  c.survival.reserve(t_grid.size());
  for (double t : t_grid) c.survival.push_back(pred.survival(t));
  return c;
}

std::string fit_to_json(const FitResult& fit) {
  using nlohmann::ordered_json;
  auto num = [](double x) -> ordered_json {
    if (!std::isfinite(x)) return nullptr;
    return std::stod(format_sig6(x));
  };
  ordered_json j;
  j["method"] = fit.method == FitMethod::Mle ? "mle" : "moment";
  j["family"] = fit.family;
  j["fixed_rho"] = fit.fixed_rho;
  j["rho_hat"] = num(fit.rho_hat);
  j["nu_hat"] = num(fit.nu_hat);
  j["se_rho"] = num(fit.se_rho);
  j["se_nu"] = num(fit.se_nu);
  j["se_log_nu"] = num(fit.se_log_nu);
  j["se_log_nu_information"] = num(fit.se_log_nu_information);
  j["loglik"] = num(fit.loglik);
  j["boundary_warning"] = fit.boundary_warning;
  if (fit.method == FitMethod::Mle && !fit.fixed_rho) {
    j["ci_level"] = num(fit.ci_level);
    j["ci_log_rho"] = {num(fit.ci_log_rho.first), num(fit.ci_log_rho.second)};
  }
  ordered_json prof = ordered_json::array();
  for (const auto& p : fit.profile) prof.push_back({{"rho", num(p.rho)}, {"loglik", num(p.loglik)}});
  j["profile"] = prof;
  return j.dump(2);
}

}  // namespace exsurv
