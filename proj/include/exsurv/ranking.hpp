#pragma once

// Ordered partitions (partial rankings) generated by a splitting rule.

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "exsurv/index.hpp"
#include "exsurv/random.hpp"

namespace exsurv {

using BigInt = boost::multiprecision::cpp_int;

/// Σ_k k! S(n, k).
BigInt ordered_bell(int n);
/// Σ_k S(n, k).
BigInt bell(int n);
/// Stirling numbers of the second kind.
BigInt stirling2(int n, int k);

class OrderedPartition {
 public:
  /// Particle ids are 0..n-1. Throws ParameterError unless blocks partition [n].
  OrderedPartition(int n, std::vector<std::vector<int>> blocks);

  int n() const { return n_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  std::vector<int> block_sizes() const;

 private:
  int n_;
  std::vector<std::vector<int>> blocks_;
};

struct BlockStats {
  int n;
  int num_blocks;
  int first_block_size;
  std::vector<int> block_sizes;
};

BlockStats block_stats(const OrderedPartition& partition);

/// Type-erased view of a splitting rule: log q(r, d) and the largest n it covers.
struct SplitRuleView {
  std::function<double(int, int)> log_q;
  int max_n;
};

SplitRuleView split_rule(const CharacteristicIndex& index);
SplitRuleView split_rule(const SplittingRuleTable& table);

/// Π_j q(remaining after block j, size of block j); depends only on the sizes.
double ranking_prob(const OrderedPartition& partition, const SplitRuleView& rule);
double ranking_prob_sizes(const std::vector<int>& sizes, const SplitRuleView& rule);

/// P(d) = C(n, d) q(n-d, d) for d = 1..n, stored at index d - 1.
Eigen::VectorXd first_block_distribution(int n, const SplitRuleView& rule);

/// Visits every ordered partition of [n]; only sensible for small n.
void for_each_ordered_partition(int n, const std::function<void(const OrderedPartition&)>& visit);

/// Sequential block-size sampler with per-level CDFs cached up to a size cap.
/// Not thread-safe; give each worker its own sampler.
class RankingSampler {
 public:
  explicit RankingSampler(SplitRuleView rule, int cache_max_m = 2048);

  /// Block sizes in order.
  std::vector<int> sample_sizes(int n, Rng& rng) const;
  /// Sizes plus a uniformly random assignment of particles to blocks.
  OrderedPartition sample(int n, Rng& rng) const;
  /// Size of the first block only.
  int sample_first_block(int n, Rng& rng) const;

 private:
  const std::vector<double>& cdf(int m) const;

  SplitRuleView rule_;
  int cache_max_m_;
  mutable std::vector<std::unique_ptr<std::vector<double>>> cache_;
  // One level above the cap, kept once it is requested twice in a row.
  mutable int last_big_m_ = -1;
  mutable std::unique_ptr<std::vector<double>> big_cdf_;
};

OrderedPartition sample_ranking(int n, const SplitRuleView& rule, Rng& rng);

/// μ_0..μ_n from μ_m = 1 + Σ_d C(m,d) q(m-d,d) μ_{m-d}, μ_0 = 0.
std::vector<double> expected_blocks_all(int n, const SplitRuleView& rule);
double expected_blocks(int n, const SplitRuleView& rule);

struct BlockGrowthRow {
  int n;
  double mean_k;
  double se;
  int reps;
};

/// Monte Carlo mean number of blocks. Worker w draws from make_rng(seed, w).
std::vector<BlockGrowthRow> block_growth_probe(const CharacteristicIndex& index,
                                               const std::vector<int>& n_list, int reps,
                                               std::uint64_t seed, int workers = 1);

/// CSV with header n,mean_k,se,reps,family,params.
void write_block_growth_csv(std::ostream& out, const std::vector<BlockGrowthRow>& rows,
                            const CharacteristicIndex& index);

}  // namespace exsurv
