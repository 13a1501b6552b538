#include "exsurv/ranking.hpp"

#include <algorithm>
#include <climits>
#include <limits>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <ostream>
#include <string>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "exsurv/errors.hpp"
#include "exsurv/special.hpp"
#include "exsurv/text.hpp"

namespace exsurv {

namespace {

void require_n(int n) {
  if (n < 0) throw ParameterError("n must be non-negative");
}

void require_covered(int n, const SplitRuleView& rule) {
  if (n > rule.max_n) {
    throw ParameterError("splitting rule covers n <= " + std::to_string(rule.max_n) + ", got " +
                         std::to_string(n));
  }
}

}  // namespace

BigInt stirling2(int n, int k) {
  require_n(n);
  if (k < 0 || k > n) return 0;
  // Row recurrence S(m, j) = j S(m-1, j) + S(m-1, j-1).
  std::vector<BigInt> row(k + 1, 0);
  row[0] = 1;
  for (int m = 1; m <= n; ++m) {
    for (int j = std::min(m, k); j >= 1; --j) row[j] = j * row[j] + row[j - 1];
    row[0] = 0;
  }
  return row[k];
}

BigInt ordered_bell(int n) {
  require_n(n);
  // a_m = Σ_{d=1}^m C(m, d) a_{m-d}: choose the first block.
  std::vector<BigInt> a(n + 1, 0);
  a[0] = 1;
  for (int m = 1; m <= n; ++m) {
    BigInt c = 1;
    for (int d = 1; d <= m; ++d) {
      c = c * (m - d + 1) / d;
      a[m] += c * a[m - d];
    }
  }
  return a[n];
}

BigInt bell(int n) {
  require_n(n);
  // B_{m+1} = Σ_k C(m, k) B_k.
  std::vector<BigInt> b(n + 1, 0);
  b[0] = 1;
  for (int m = 0; m < n; ++m) {
    BigInt c = 1;
    for (int k = 0; k <= m; ++k) {
      if (k > 0) c = c * (m - k + 1) / k;
      b[m + 1] += c * b[k];
    }
  }
  return b[n];
}

OrderedPartition::OrderedPartition(int n, std::vector<std::vector<int>> blocks)
    : n_(n), blocks_(std::move(blocks)) {
  if (n < 1) throw ParameterError("ordered partition needs n >= 1");
  std::vector<char> seen(n, 0);
  int count = 0;
  for (const auto& block : blocks_) {
    if (block.empty()) throw ParameterError("ordered partition has an empty block");
    for (int id : block) {
      if (id < 0 || id >= n) throw ParameterError("particle id out of range: " + std::to_string(id));
      if (seen[id]) throw ParameterError("particle id repeated: " + std::to_string(id));
      seen[id] = 1;
      ++count;
    }
  }
  if (count != n) throw ParameterError("blocks do not cover all particles");
}

std::vector<int> OrderedPartition::block_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(blocks_.size());
  for (const auto& b : blocks_) sizes.push_back(static_cast<int>(b.size()));
  return sizes;
}

BlockStats block_stats(const OrderedPartition& partition) {
  auto sizes = partition.block_sizes();
  return {partition.n(), partition.num_blocks(), sizes.front(), std::move(sizes)};
}

namespace {

// log ζ_n for a ν = 1 index, filled on demand; shared by copies of one rule.
class LogZetaCache {
 public:
  explicit LogZetaCache(CharacteristicIndex index) : index_(std::move(index)) {}

  double get(int n) {
    {
      std::shared_lock lock(mutex_);
      if (n < static_cast<int>(values_.size()) && !std::isnan(values_[n])) return values_[n];
    }
    const double v = std::log(index_.zeta(n));
    std::unique_lock lock(mutex_);
    if (n >= static_cast<int>(values_.size())) values_.resize(n + 1, std::numeric_limits<double>::quiet_NaN());
    values_[n] = v;
    return v;
  }

 private:
  CharacteristicIndex index_;
  std::shared_mutex mutex_;
  std::vector<double> values_;
};

}  // namespace

SplitRuleView split_rule(const CharacteristicIndex& index) {
  // With ν = 1 this equals index.log_split_prob bit for bit.
  const auto unit = index.rescaled(1.0);
  auto cache = std::make_shared<LogZetaCache>(unit);
  return {[unit, cache](int r, int d) {
            if (r < 0 || d < 1) throw ParameterError("split_prob: need r >= 0 and d >= 1");
            return unit.log_lambda_rate(r, d) - cache->get(r + d);
          },
          INT_MAX};
}

SplitRuleView split_rule(const SplittingRuleTable& table) {
  return {[table](int r, int d) { return table.log_split_prob(r, d); }, table.max_n()};
}

double ranking_prob_sizes(const std::vector<int>& sizes, const SplitRuleView& rule) {
  int n = 0;
  for (int s : sizes) {
    if (s < 1) throw ParameterError("block sizes must be positive");
    n += s;
  }
  require_covered(n, rule);
  double log_p = 0.0;
  int remaining = n;
  for (int s : sizes) {
    remaining -= s;
    log_p += rule.log_q(remaining, s);
  }
  return std::exp(log_p);
}

double ranking_prob(const OrderedPartition& partition, const SplitRuleView& rule) {
  return ranking_prob_sizes(partition.block_sizes(), rule);
}

Eigen::VectorXd first_block_distribution(int n, const SplitRuleView& rule) {
  if (n < 1) throw ParameterError("first_block_distribution needs n >= 1");
  require_covered(n, rule);
  Eigen::VectorXd p(n);
  for (int d = 1; d <= n; ++d) p(d - 1) = std::exp(log_binomial(n, d) + rule.log_q(n - d, d));
  return p;
}

void for_each_ordered_partition(int n, const std::function<void(const OrderedPartition&)>& visit) {
  if (n < 1 || n > 20) throw ParameterError("enumeration supports 1 <= n <= 20");
  std::vector<std::vector<int>> blocks;
  const std::uint32_t all = (std::uint32_t{1} << n) - 1;
  std::function<void(std::uint32_t)> rec = [&](std::uint32_t left) {
    if (left == 0) {
      visit(OrderedPartition(n, blocks));
      return;
    }
    // Non-empty subsets of `left` as the next block.
    for (std::uint32_t sub = left; sub != 0; sub = (sub - 1) & left) {
      std::vector<int> block;
      for (int i = 0; i < n; ++i) {
        if (sub >> i & 1U) block.push_back(i);
      }
      blocks.push_back(std::move(block));
      rec(left & ~sub);
      blocks.pop_back();
    }
  };
  rec(all);
}

RankingSampler::RankingSampler(SplitRuleView rule, int cache_max_m)
    : rule_(std::move(rule)), cache_max_m_(cache_max_m) {}

namespace {

std::unique_ptr<std::vector<double>> build_cdf(int m, const SplitRuleView& rule) {
  const Eigen::VectorXd p = first_block_distribution(m, rule);
  auto c = std::make_unique<std::vector<double>>(m);
  double total = 0.0;
  for (int d = 0; d < m; ++d) {
    if (!(p(d) >= 0.0)) throw ParameterError("splitting rule gives a negative or NaN probability");
    total += p(d);
    (*c)[d] = total;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ParameterError("splitting rule is not normalized at n = " + std::to_string(m));
  }
  for (double& v : *c) v /= total;
  return c;
}

}  // namespace

const std::vector<double>& RankingSampler::cdf(int m) const {
  if (m > cache_max_m_) {
    if (!big_cdf_ || static_cast<int>(big_cdf_->size()) != m) big_cdf_ = build_cdf(m, rule_);
    return *big_cdf_;
  }
  if (static_cast<int>(cache_.size()) <= m) cache_.resize(m + 1);
  auto& slot = cache_[m];
  if (!slot) slot = build_cdf(m, rule_);
  return *slot;
}

int RankingSampler::sample_first_block(int m, Rng& rng) const {
  if (m < 1) throw ParameterError("sample needs n >= 1");
  require_covered(m, rule_);
  const double u = uniform_open(rng);
  const bool repeated = m == last_big_m_;
  if (m > cache_max_m_) last_big_m_ = m;
  if (m <= cache_max_m_ || repeated) {
    const auto& c = cdf(m);
    const auto it = std::lower_bound(c.begin(), c.end(), u);
    return it == c.end() ? m : static_cast<int>(it - c.begin()) + 1;
  }
  // Large levels: scan the pmf without storing it.
  double acc = 0.0;
  int last_positive = 1;
  for (int d = 1; d <= m; ++d) {
    const double p = std::exp(log_binomial(m, d) + rule_.log_q(m - d, d));
    if (p > 0.0) last_positive = d;
    acc += p;
    if (acc >= u) return d;
  }
  return last_positive;
}

std::vector<int> RankingSampler::sample_sizes(int n, Rng& rng) const {
  std::vector<int> sizes;
  int m = n;
  while (m > 0) {
    const int d = sample_first_block(m, rng);
    sizes.push_back(d);
    m -= d;
  }
  return sizes;
}

OrderedPartition RankingSampler::sample(int n, Rng& rng) const {
  const auto sizes = sample_sizes(n, rng);
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::vector<int>> blocks;
  auto it = ids.begin();
  for (int s : sizes) {
    std::vector<int> block(it, it + s);
    std::sort(block.begin(), block.end());
    blocks.push_back(std::move(block));
    it += s;
  }
  return OrderedPartition(n, std::move(blocks));
}

OrderedPartition sample_ranking(int n, const SplitRuleView& rule, Rng& rng) {
  return RankingSampler(rule).sample(n, rng);
}

std::vector<double> expected_blocks_all(int n, const SplitRuleView& rule) {
  require_n(n);
  require_covered(n, rule);
  std::vector<double> mu(n + 1, 0.0);
  std::vector<double> log_fact(n + 1);
  for (int k = 0; k <= n; ++k) log_fact[k] = boost::math::lgamma(k + 1.0);
  for (int m = 1; m <= n; ++m) {
    double s = 1.0;
    for (int d = 1; d < m; ++d) {
      const double lb = log_fact[m] - log_fact[d] - log_fact[m - d];
      const double p = std::exp(lb + rule.log_q(m - d, d));
      s += p * mu[m - d];
    }
    mu[m] = s;
  }
  return mu;
}

double expected_blocks(int n, const SplitRuleView& rule) { return expected_blocks_all(n, rule).back(); }

std::vector<BlockGrowthRow> block_growth_probe(const CharacteristicIndex& index,
                                               const std::vector<int>& n_list, int reps,
                                               std::uint64_t seed, int workers) {
  if (reps < 2) throw ParameterError("block_growth_probe needs reps >= 2");
  if (workers < 1) throw ParameterError("workers must be positive");
  for (int n : n_list) {
    if (n < 1) throw ParameterError("n_list entries must be positive");
  }
  struct Sums {
    double s = 0.0;
    double s2 = 0.0;
  };
  std::vector<std::vector<Sums>> sums(workers, std::vector<Sums>(n_list.size()));
  auto work = [&](int w) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(w));
    const RankingSampler sampler(split_rule(index));
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      for (int rep = w; rep < reps; rep += workers) {
        const double k = static_cast<double>(sampler.sample_sizes(n_list[i], rng).size());
        sums[w][i].s += k;
        sums[w][i].s2 += k * k;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  std::vector<BlockGrowthRow> rows;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    double s = 0.0;
    double s2 = 0.0;
    for (int w = 0; w < workers; ++w) {
      s += sums[w][i].s;
      s2 += sums[w][i].s2;
    }
    const double mean = s / reps;
    const double var = std::max(0.0, (s2 - reps * mean * mean) / (reps - 1));
    rows.push_back({n_list[i], mean, std::sqrt(var / reps), reps});
  }
  return rows;
}

void write_block_growth_csv(std::ostream& out, const std::vector<BlockGrowthRow>& rows,
                            const CharacteristicIndex& index) {
  std::string params = "measure";
  if (index.family() != Family::FromMeasure) {
    const std::string record = index.to_record();
    const auto space = record.find(' ');
    params = space == std::string::npos ? "" : record.substr(space + 1);
  }
  out << "n,mean_k,se,reps,family,params\n";
  for (const auto& row : rows) {
    out << row.n << ',' << format_exact(row.mean_k) << ',' << format_exact(row.se) << ',' << row.reps
        << ',' << family_name(index.family()) << ",\"" << params << "\"\n";
  }
}

}  // namespace exsurv
