#include "exsurv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "exsurv/errors.hpp"
#include "exsurv/index.hpp"
#include "exsurv/inference.hpp"
#include "exsurv/process.hpp"
#include "exsurv/ranking.hpp"
#include "exsurv/text.hpp"
#include "json.hpp"

namespace exsurv::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FamilyArgs {
  std::string family = "harmonic";
  std::optional<double> rho;
  std::optional<double> nu;
  std::optional<double> alpha;
  std::optional<double> beta;
};

void add_family_params(CLI::App* sub, FamilyArgs& f) {
  sub->add_option("--rho", f.rho, "rho for harmonic, gamma, beta, linear-shift");
  sub->add_option("--nu", f.nu, "scale nu (default 1)");
  sub->add_option("--alpha", f.alpha, "alpha for power and geometric");
  sub->add_option("--beta", f.beta, "beta for the beta-splitting family");
}

CharacteristicIndex build_index(const FamilyArgs& f) {
  const double nu = f.nu.value_or(1.0);
  const double rho = f.rho.value_or(1.0);
  auto need_alpha = [&] {
    if (!f.alpha) throw UsageError("--alpha is required for family " + f.family);
    return *f.alpha;
  };
  if (f.family == "harmonic") return CharacteristicIndex::harmonic(nu, rho);
  if (f.family == "gamma") return CharacteristicIndex::gamma(nu, rho);
  if (f.family == "power") return CharacteristicIndex::power(need_alpha(), nu);
  if (f.family == "geometric") return CharacteristicIndex::geometric(need_alpha(), nu);
  if (f.family == "linear") return CharacteristicIndex::linear(nu);
  if (f.family == "linear-shift") return CharacteristicIndex::linear_shift(rho, nu);
  if (f.family == "beta") return CharacteristicIndex::beta_splitting(rho, f.beta.value_or(0.0), nu);
  throw UsageError("unknown family '" + f.family + "'");
}

ModelFamily model_family(const std::string& name, const std::optional<double>& beta) {
  if (name == "beta") return ModelFamily::beta_splitting(beta.value_or(0.0));
  if (name == "harmonic" || name == "gamma" || name == "linear-shift") return ModelFamily::from_name(name);
  throw UsageError("family '" + name + "' has no rho to fit; use harmonic, gamma, linear-shift or beta");
}

std::string params_text(const CharacteristicIndex& index) {
  const std::string record = index.to_record();
  const auto space = record.find(' ');
  return space == std::string::npos ? "" : record.substr(space + 1);
}

// Output stream: a file when a path or the output directory is known, else `fallback`.
class Sink {
 public:
  Sink(const std::string& path, const std::string& default_name, std::ostream& fallback) {
    const char* dir = std::getenv(kOutDirEnv);
    std::filesystem::path p;
    if (!path.empty()) {
      p = path;
      if (p.is_relative() && dir != nullptr && *dir != '\0') p = std::filesystem::path(dir) / p;
    } else if (dir != nullptr && *dir != '\0') {
      p = std::filesystem::path(dir) / default_name;
    }
    if (p.empty()) {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(p);
    if (!*file_) throw DataError("cannot write " + p.string());
    stream_ = file_.get();
    path_ = p.string();
  }
  std::ostream& stream() { return *stream_; }
  bool is_file() const { return file_ != nullptr; }
  const std::string& path() const { return path_; }
  void close() {
    if (file_) {
      file_->close();
      if (!*file_) throw DataError("write failed: " + path_);
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
  std::string path_;
};

Dataset load_data(const std::string& spec) {
  if (spec == "builtin:gehan") return gehan_dataset();
  if (spec.rfind("builtin:", 0) == 0) throw UsageError("unknown builtin dataset '" + spec.substr(8) + "'");
  std::ifstream in(spec);
  if (!in) throw DataError("cannot read " + spec);
  auto d = read_dataset(in);
  if (d.records.empty()) throw UsageError("dataset " + spec + " is empty");
  return d;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  FamilyArgs family;
  int n = 0;
  std::uint64_t seed = 0;
  std::optional<double> censor_at;
  std::string out;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto index = build_index(a.family);
  if (a.n < 1) throw UsageError("-n must be at least 1");
  CensoringPlan plan(a.n, std::numeric_limits<double>::infinity());
  if (a.censor_at) {
    if (!(*a.censor_at >= 0.0)) throw UsageError("--censor-at must be non-negative");
    std::fill(plan.begin(), plan.end(), *a.censor_at);
  }
  auto rng = make_rng(a.seed);
  const auto traj = simulate(a.n, index, plan, rng);
  Sink sink(a.out, "trajectory.csv", out);
  write_trajectory_csv(sink.stream(), traj);
  sink.close();
  std::ostream& summary = sink.is_file() ? out : err;
  summary << "family: " << family_name(index.family()) << '\n'
          << "params: " << params_text(index) << '\n'
          << "n: " << a.n << '\n'
          << "failures: " << traj.total_failures() << '\n'
          << "censored: " << traj.total_censored() << '\n'
          << "distinct_failure_times: " << traj.failure_epochs() << '\n'
          << "last_event: " << format_sig6(traj.events().empty() ? 0.0 : traj.events().back().time) << '\n';
  if (sink.is_file()) summary << "output: " << sink.path() << '\n';
}

struct FitArgs {
  std::string data;
  std::vector<std::string> families{"harmonic", "gamma"};
  std::optional<double> beta;
  std::string method = "both";
  std::optional<double> fix_rho;
  std::string grid;
  double level = 0.95;
  std::string out;
};

void cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const auto data = load_data(a.data);
  if (a.method != "mle" && a.method != "moment" && a.method != "both") {
    throw UsageError("--method must be mle, moment or both");
  }
  FitOptions opts;
  opts.fixed_rho = a.fix_rho;
  opts.ci_level = a.level;
  if (!(a.level > 0.0 && a.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  if (!a.grid.empty()) {
    const auto g = parse_grid(a.grid);
    if (g.size() < 3) throw UsageError("--grid needs at least three log rho points");
    opts.log_rho_lo = g.front();
    opts.log_rho_hi = g.back();
    opts.grid_points = static_cast<int>(g.size());
  }
  using nlohmann::ordered_json;
  auto num = [](double x) -> ordered_json {
    if (!std::isfinite(x)) return nullptr;
    return std::stod(format_sig6(x));
  };
  const auto traj = to_trajectory(data);
  const auto expo = exponential_fit(data);
  ordered_json j;
  j["data"] = {{"source", a.data},
               {"n", data.size()},
               {"deaths", data.deaths()},
               {"failure_times", traj.failure_epochs()},
               {"risk_time", num(sufficient_stats(traj, ModelFamily::harmonic(), 1.0).total_risk_time)},
               {"unit", data.unit}};
  j["exponential"] = {{"rate", num(expo.rate)}, {"mean", num(expo.mean)}};
  ordered_json fits = ordered_json::array();
  for (const auto& name : a.families) {
    const auto fam = model_family(name, a.beta);
    std::vector<FitResult> results;
    if (a.method != "moment") results.push_back(fit_mle(data, fam, opts));
    if (a.method != "mle") results.push_back(fit_moment(data, fam, opts));
    for (const auto& r : results) {
      auto fj = ordered_json::parse(fit_to_json(r));
      fj["mean_survival"] = num(1.0 / fam.at(r.rho_hat, r.nu_hat).zeta(1));
      if (r.boundary_warning) err << "warning: " << name << " profile maximum at the grid boundary\n";
      fits.push_back(std::move(fj));
    }
  }
  j["fits"] = std::move(fits);
  Sink sink(a.out, "fit.json", out);
  sink.stream() << j.dump(2) << '\n';
  sink.close();
  if (sink.is_file()) out << "output: " << sink.path() << '\n';
}

struct PredictArgs {
  std::string data;
  std::string grid;
  std::optional<double> fix_rho;
  std::string out;
};

void cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto data = load_data(a.data);
  std::vector<double> grid;
  if (a.grid.empty()) {
    double last = 0.0;
    for (const auto& r : data.records) last = std::max(last, r.time);
    grid = parse_grid("0:" + format_exact(std::ceil(last)) + ":1");
  } else {
    grid = parse_grid(a.grid);
  }
  FitOptions opts;
  opts.fixed_rho = a.fix_rho;
  const auto harmonic = ModelFamily::harmonic();
  const auto gamma = ModelFamily::gamma();
  const auto sh = empirical_bayes_curve(data, harmonic, fit_mle(data, harmonic, opts), grid);
  const auto sg = empirical_bayes_curve(data, gamma, fit_mle(data, gamma, opts), grid);
  const auto km = kaplan_meier(data);
  const auto expo = exponential_fit(data);
  Sink sink(a.out, "predict.csv", out);
  auto& s = sink.stream();
  s << "t,S_harmonic,S_gamma,S_KM,S_exponential\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    s << format_sig6(t) << ',' << format_sig6(sh.survival[i]) << ',' << format_sig6(sg.survival[i]) << ','
      << format_sig6(km.at(t)) << ',' << format_sig6(expo.survival(t)) << '\n';
  }
  sink.close();
  if (sink.is_file()) out << "output: " << sink.path() << '\n';
}

struct BlocksArgs {
  FamilyArgs family;
  std::vector<int> n_list;
  int reps = 1000;
  std::uint64_t seed = 0;
  int workers = 4;
  std::string out;
};

void cmd_blocks(const BlocksArgs& a, std::ostream& out) {
  const auto index = build_index(a.family);
  if (a.n_list.empty()) throw UsageError("--n-list is empty");
  for (int n : a.n_list) {
    if (n < 1) throw UsageError("--n-list entries must be positive");
  }
  if (a.reps < 2) throw UsageError("--reps must be at least 2");
  if (a.workers < 1) throw UsageError("--workers must be at least 1");
  const auto rows = block_growth_probe(index, a.n_list, a.reps, a.seed, a.workers);
  const int n_max = *std::max_element(a.n_list.begin(), a.n_list.end());
  const auto mu = expected_blocks_all(n_max, split_rule(index));
  Sink sink(a.out, "blocks.csv", out);
  auto& s = sink.stream();
  s << "n,mean_k,se,reps,expected_k,family,params\n";
  for (const auto& r : rows) {
    s << r.n << ',' << format_sig6(r.mean_k) << ',' << format_sig6(r.se) << ',' << r.reps << ','
      << format_sig6(mu[r.n]) << ',' << family_name(index.family()) << ",\"" << params_text(index) << "\"\n";
  }
  sink.close();
  if (sink.is_file()) out << "output: " << sink.path() << '\n';
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() != 3) throw ParameterError("grid must look like a:b:step");
  double a;
  double b;
  double step;
  try {
    a = parse_double(trim(parts[0]));
    b = parse_double(trim(parts[1]));
    step = parse_double(trim(parts[2]));
  } catch (const DataError& e) {
    throw ParameterError(std::string("grid: ") + e.what());
  }
  if (!std::isfinite(a) || !std::isfinite(b) || !(step > 0.0) || !std::isfinite(step) || b < a) {
    throw ParameterError("grid needs finite a <= b and step > 0");
  }
  const double count = std::floor((b - a) / step * (1.0 + 1e-12) + 1e-9) + 1.0;
  if (count > 1e7) throw ParameterError("grid has more than 1e7 points");
  std::vector<double> g;
  for (long i = 0; i < static_cast<long>(count); ++i) g.push_back(a + step * static_cast<double>(i));
  return g;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exchangeable Markov survival processes", args.empty() ? "exsurv" : args[0]};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate a risk-set trajectory");
  s->add_option("--family", sim.family.family, "harmonic|gamma|power|beta|geometric|linear|linear-shift")
      ->required();
  add_family_params(s, sim.family);
  s->add_option("-n", sim.n, "number of particles")->required();
  s->add_option("--seed", sim.seed, "random seed")->required();
  s->add_option("--censor-at", sim.censor_at, "censor every particle at this time");
  s->add_option("--out", sim.out, "trajectory CSV path");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "estimate rho and nu");
  f->add_option("--data", fit.data, "CSV path or builtin:gehan")->required();
  f->add_option("--family", fit.families, "harmonic|gamma|linear-shift|beta, repeatable")->delimiter(',');
  f->add_option("--beta", fit.beta, "beta for the beta family");
  f->add_option("--method", fit.method, "mle|moment|both");
  f->add_option("--fix-rho", fit.fix_rho, "treat rho as fixed at this value");
  f->add_option("--grid", fit.grid, "log rho profile grid a:b:step");
  f->add_option("--level", fit.level, "profile interval level");
  f->add_option("--out", fit.out, "JSON path");

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "predictive survivor curves");
  p->add_option("--data", pred.data, "CSV path or builtin:gehan")->required();
  p->add_option("--grid", pred.grid, "time grid a:b:step");
  p->add_option("--fix-rho", pred.fix_rho, "treat rho as fixed at this value");
  p->add_option("--out", pred.out, "CSV path");

  BlocksArgs blk;
  auto* b = app.add_subcommand("blocks", "block counts of random partial rankings");
  b->add_option("--family", blk.family.family, "harmonic|gamma|power|beta|geometric|linear|linear-shift")
      ->required();
  add_family_params(b, blk.family);
  b->add_option("--n-list", blk.n_list, "comma-separated sizes")->delimiter(',')->required();
  b->add_option("--reps", blk.reps, "Monte Carlo replicates per size");
  b->add_option("--seed", blk.seed, "random seed")->required();
  b->add_option("--workers", blk.workers, "threads; results depend on this value");
  b->add_option("--out", blk.out, "CSV path");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) cmd_simulate(sim, out, err);
    if (f->parsed()) cmd_fit(fit, out, err);
    if (p->parsed()) cmd_predict(pred, out);
    if (b->parsed()) cmd_blocks(blk, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParameterError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const ResourceError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}

}  // namespace exsurv::cli
