#include "exsurv/process.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "exsurv/errors.hpp"
#include "exsurv/text.hpp"

namespace exsurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool event_has_ids(const Event& e) { return !e.failed_ids.empty() || !e.censored_ids.empty(); }

}  // namespace

RiskSetTrajectory::RiskSetTrajectory(int n0, std::vector<Event> events) : n0_(n0), events_(std::move(events)) {
  if (n0 < 0) throw ParameterError("n0 must be non-negative");
  int used = 0;
  double last = 0.0;
  int with_ids = 0;
  std::vector<char> seen(n0, 0);
  for (const auto& e : events_) {
    if (!(e.time > last) || !std::isfinite(e.time)) {
      throw ParameterError("event times must be finite, positive and strictly increasing");
    }
    last = e.time;
    if (e.failures < 0 || e.censored < 0 || e.failures + e.censored < 1) {
      throw ParameterError("each event needs at least one failure or censoring");
    }
    used += e.failures + e.censored;
    if (used > n0) throw ParameterError("events account for more than n0 particles");
    if (!event_has_ids(e)) continue;
    ++with_ids;
    if (static_cast<int>(e.failed_ids.size()) != e.failures ||
        static_cast<int>(e.censored_ids.size()) != e.censored) {
      throw ParameterError("particle id lists do not match event counts");
    }
    for (const auto* ids : {&e.failed_ids, &e.censored_ids}) {
      for (int id : *ids) {
        if (id < 0 || id >= n0) throw ParameterError("particle id out of range");
        if (seen[id]) throw ParameterError("particle id appears twice: " + std::to_string(id));
        seen[id] = 1;
      }
    }
  }
  if (with_ids != 0 && with_ids != static_cast<int>(events_.size())) {
    throw ParameterError("particle ids must be given for all events or none");
  }
  has_ids_ = with_ids == static_cast<int>(events_.size());
}

int RiskSetTrajectory::total_failures() const {
  int s = 0;
  for (const auto& e : events_) s += e.failures;
  return s;
}

int RiskSetTrajectory::total_censored() const {
  int s = 0;
  for (const auto& e : events_) s += e.censored;
  return s;
}

int RiskSetTrajectory::unresolved() const { return n0_ - total_failures() - total_censored(); }

int RiskSetTrajectory::failure_epochs() const {
  return static_cast<int>(std::count_if(events_.begin(), events_.end(), [](const Event& e) { return e.failures > 0; }));
}

int RiskSetTrajectory::at_risk_before(double t) const {
  int m = n0_;
  for (const auto& e : events_) {
    if (e.time >= t) break;
    m -= e.failures + e.censored;
  }
  return m;
}

CensoringPlan no_censoring(int n) { return CensoringPlan(n, kInf); }

Simulator::Simulator(CharacteristicIndex index) : index_(index), sampler_(split_rule(index)) {}

RiskSetTrajectory Simulator::run(int n, Rng& rng) const { return run(no_censoring(n), rng); }

RiskSetTrajectory Simulator::run(const CensoringPlan& plan, Rng& rng) const {
  std::vector<int> alive;
  for (int i = 0; i < static_cast<int>(plan.size()); ++i) {
    if (std::isnan(plan[i]) || plan[i] < 0.0) throw ParameterError("censoring times must be non-negative");
    if (plan[i] > 0.0) alive.push_back(i);
  }
  // Ids are relabelled onto the retained particles so that they stay in [0, n0).
  std::vector<int> label(plan.size(), -1);
  for (int j = 0; j < static_cast<int>(alive.size()); ++j) label[alive[j]] = j;
  const int n0 = static_cast<int>(alive.size());

  std::vector<Event> events;
  double t = 0.0;
  while (!alive.empty()) {
    const int m = static_cast<int>(alive.size());
    double next_censor = kInf;
    for (int i : alive) next_censor = std::min(next_censor, plan[i]);
    const double hold = exponential(rng, index_.zeta(m));
    if (t + hold >= next_censor) {
      t = next_censor;
      Event e{t, 0, 0};
      std::vector<int> keep;
      for (int i : alive) {
        if (plan[i] == next_censor) {
          e.censored_ids.push_back(label[i]);
        } else {
          keep.push_back(i);
        }
      }
      e.censored = static_cast<int>(e.censored_ids.size());
      std::sort(e.censored_ids.begin(), e.censored_ids.end());
      alive.swap(keep);
      events.push_back(std::move(e));
      continue;
    }
    t += hold;
    const int d = sampler_.sample_first_block(m, rng);
    // Partial Fisher-Yates: the last d entries become the failing block.
    for (int k = 0; k < d; ++k) {
      std::uniform_int_distribution<int> pick(0, m - 1 - k);
      std::swap(alive[pick(rng)], alive[m - 1 - k]);
    }
    Event e{t, d, 0};
    for (int k = m - d; k < m; ++k) e.failed_ids.push_back(label[alive[k]]);
    std::sort(e.failed_ids.begin(), e.failed_ids.end());
    alive.resize(m - d);
    events.push_back(std::move(e));
  }
  return RiskSetTrajectory(n0, std::move(events));
}

RiskSetTrajectory simulate(int n, const CharacteristicIndex& index, const CensoringPlan& plan, Rng& rng) {
  if (n < 1) throw ParameterError("simulate needs n >= 1");
  if (static_cast<int>(plan.size()) != n) throw ParameterError("censoring plan size must equal n");
  return Simulator(index).run(plan, rng);
}

LogDensity log_density(const RiskSetTrajectory& traj, const CharacteristicIndex& index) {
  if (traj.unresolved() != 0) {
    throw ParameterError("log_density needs every particle to fail or be censored");
  }
  int m = traj.n0();
  double prev = 0.0;
  double integral = 0.0;
  double product = 0.0;
  for (const auto& e : traj.events()) {
    integral += index.zeta(m) * (e.time - prev);
    prev = e.time;
    if (e.failures > 0) {
      const double l = index.log_lambda_rate(m - e.failures, e.failures);
      if (!std::isfinite(l)) return {-kInf, true};
      product += l;
    }
    m -= e.failures + e.censored;
  }
  return {product - integral, false};
}

Predictive::Predictive(const RiskSetTrajectory& history, const CharacteristicIndex& index) {
  int m = history.n0();
  breaks_.push_back(0.0);
  hazard_.push_back(index.lambda_rate(m, 1));
  for (const auto& e : history.events()) {
    if (e.failures > 0) {
      const int r = m - e.failures;
      const double log_den = index.log_lambda_rate(r, e.failures);
      if (!std::isfinite(log_den)) throw ParameterError("history has probability zero under this index");
      atoms_.push_back({e.time, std::exp(index.log_lambda_rate(r + 1, e.failures) - log_den)});
    }
    m -= e.failures + e.censored;
    breaks_.push_back(e.time);
    hazard_.push_back(index.lambda_rate(m, 1));
  }
}

double Predictive::survival(double t) const {
  if (t < 0.0) throw ParameterError("survival needs t >= 0");
  double h = 0.0;
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    const double a = breaks_[i];
    if (a >= t) break;
    const double b = i + 1 < breaks_.size() ? std::min(breaks_[i + 1], t) : t;
    h += hazard_[i] * (b - a);
  }
  double s = std::exp(-h);
  for (const auto& atom : atoms_) {
    if (atom.time > t) break;
    s *= atom.pass;
  }
  return s;
}

double Predictive::sample(Rng& rng) const {
  std::size_t next_atom = 0;
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    const double a = breaks_[i];
    const double b = i + 1 < breaks_.size() ? breaks_[i + 1] : kInf;
    const double x = a + exponential(rng, hazard_[i]);
    if (x < b) return x;
    if (next_atom < atoms_.size() && atoms_[next_atom].time == b) {
      if (uniform_open(rng) >= atoms_[next_atom].pass) return b;
      ++next_atom;
    }
  }
  return kInf;  // unreachable: the last piece is unbounded
}

double predictive_survival(double t, const RiskSetTrajectory& history, const CharacteristicIndex& index) {
  return Predictive(history, index).survival(t);
}

double sample_next(const RiskSetTrajectory& history, const CharacteristicIndex& index, Rng& rng) {
  return Predictive(history, index).sample(rng);
}

RiskSetTrajectory add_failure(const RiskSetTrajectory& history, double time) {
  if (!(time > 0.0) || !std::isfinite(time)) throw ParameterError("failure time must be finite and positive");
  const int id = history.n0();
  const bool ids = history.has_ids();
  std::vector<Event> events = history.events();
  auto it = std::lower_bound(events.begin(), events.end(), time,
                             [](const Event& e, double x) { return e.time < x; });
  if (it != events.end() && it->time == time) {
    ++it->failures;
    if (ids) it->failed_ids.push_back(id);
  } else {
    Event e{time, 1, 0};
    if (ids) e.failed_ids.push_back(id);
    events.insert(it, std::move(e));
  }
  return RiskSetTrajectory(history.n0() + 1, std::move(events));
}

RiskSetTrajectory seeded_simulate(const RiskSetTrajectory& seed, int m_new, const CharacteristicIndex& index,
                                  Rng& rng) {
  if (m_new < 0) throw ParameterError("m_new must be non-negative");
  RiskSetTrajectory traj = seed;
  for (int i = 0; i < m_new; ++i) traj = add_failure(traj, sample_next(traj, index, rng));
  return traj;
}

RiskSetTrajectory residual_trajectory(const RiskSetTrajectory& traj, double t) {
  if (!(t >= 0.0)) throw ParameterError("residual time must be non-negative");
  int gone = 0;
  std::vector<Event> events;
  for (const auto& e : traj.events()) {
    if (e.time <= t) {
      gone += e.failures + e.censored;
      continue;
    }
    Event shifted = e;
    shifted.time = e.time - t;
    events.push_back(std::move(shifted));
  }
  if (!traj.has_ids() || gone == 0) return RiskSetTrajectory(traj.n0() - gone, std::move(events));
  // Compact surviving ids onto 0..n0'-1 in their original order.
  std::vector<int> label(traj.n0(), -1);
  std::vector<char> removed(traj.n0(), 0);
  for (const auto& e : traj.events()) {
    if (e.time > t) break;
    for (int id : e.failed_ids) removed[id] = 1;
    for (int id : e.censored_ids) removed[id] = 1;
  }
  int next = 0;
  for (int i = 0; i < traj.n0(); ++i) {
    if (!removed[i]) label[i] = next++;
  }
  for (auto& e : events) {
    for (int& id : e.failed_ids) id = label[id];
    for (int& id : e.censored_ids) id = label[id];
  }
  return RiskSetTrajectory(traj.n0() - gone, std::move(events));
}

TimeTransform TimeTransform::identity() {
  return {[](double s) { return s; }, [](double t) { return t; }, [](double) { return 0.0; }};
}

TimeTransform TimeTransform::scale(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("time scale must be positive");
  return {[c](double s) { return c * s; }, [c](double t) { return t / c; },
          [c](double) { return -std::log(c); }};
}

TimeTransform TimeTransform::power(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("power transform needs a > 0");
  return {[a](double s) { return std::pow(s, 1.0 / a); }, [a](double t) { return std::pow(t, a); },
          [a](double t) { return std::log(a) + (a - 1.0) * std::log(t); }};
}

namespace {

RiskSetTrajectory map_times(const RiskSetTrajectory& traj, const std::function<double(double)>& f) {
  std::vector<Event> events = traj.events();
  for (auto& e : events) e.time = f(e.time);
  // The constructor rejects maps that are not positive and increasing.
  return RiskSetTrajectory(traj.n0(), std::move(events));
}

}  // namespace

RiskSetTrajectory apply_time_transform(const RiskSetTrajectory& traj, const TimeTransform& tf) {
  return map_times(traj, tf.forward);
}

LogDensity log_density(const RiskSetTrajectory& traj, const CharacteristicIndex& index, const TimeTransform& tf) {
  LogDensity base = log_density(map_times(traj, tf.inverse), index);
  if (base.zero_probability) return base;
  for (const auto& e : traj.events()) {
    if (e.failures > 0) base.value += tf.log_inverse_derivative(e.time);
  }
  return base;
}

void write_trajectory_csv(std::ostream& out, const RiskSetTrajectory& traj) {
  out << "time,n_failures,n_censored\n";
  for (const auto& e : traj.events()) out << format_exact(e.time) << ',' << e.failures << ',' << e.censored << '\n';
}

RiskSetTrajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "time,n_failures,n_censored") {
    throw DataError("trajectory CSV must start with the header time,n_failures,n_censored");
  }
  std::vector<Event> events;
  int n0 = 0;
  int line_no = 1;
  auto parse_count = [&](std::string_view field) {
    const double v = parse_double(field);
    if (v < 0.0 || v != std::floor(v) || v > 1e9) {
      throw DataError("line " + std::to_string(line_no) + ": counts must be non-negative integers");
    }
    return static_cast<int>(v);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto c1 = body.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : body.find(',', c1 + 1);
    if (c2 == std::string_view::npos || body.find(',', c2 + 1) != std::string_view::npos) {
      throw DataError("line " + std::to_string(line_no) + ": expected three fields");
    }
    Event e{parse_double(trim(body.substr(0, c1))), parse_count(trim(body.substr(c1 + 1, c2 - c1 - 1))),
            parse_count(trim(body.substr(c2 + 1)))};
    n0 += e.failures + e.censored;
    events.push_back(std::move(e));
  }
  try {
    return RiskSetTrajectory(n0, std::move(events));
  } catch (const ParameterError& err) {
    throw DataError(std::string("invalid trajectory: ") + err.what());
  }
}

}  // namespace exsurv
