#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collide/chaos.hpp"
#include "collide/collisions.hpp"
#include "collide/random.hpp"
#include "collide/stats.hpp"
#include "json.hpp"

namespace collide::harness {

/// One replicate from its own substream; r is the replicate index.
using Sampler = std::function<double(Stream& stream, std::size_t r)>;

/// Replicate r draws from Stream::substream(master, r). Throws
/// NonFiniteSample if any replicate is NaN or infinite, DomainError if R < 2.
MonteCarloSummary mc_estimate(const Sampler& sampler, long long R, std::uint64_t master, int workers = 1,
                              std::vector<double>* samples = nullptr);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  /// Both samples were integer valued and were jittered before the test;
  /// the p-value is then conservative.
  bool discrete = false;
};

/// Survival function of the Kolmogorov distribution.
double kolmogorov_q(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value. Integer
/// valued samples get uniform(0,1) jitter, the same draw for index i of
/// either sample.
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys, std::uint64_t jitter_seed = 0);

struct Verdict {
  std::string rule;
  bool passed = false;
  std::string detail;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
  std::string experiment;
  nlohmann::ordered_json config;
  std::vector<Table> tables;
  std::vector<Verdict> verdicts;
  /// Per-replicate data, written only on request.
  std::vector<Table> raw;

  bool passed() const;
  const Verdict& verdict(const std::string& rule) const;
  const Table& table(const std::string& name) const;
};

nlohmann::ordered_json to_json(const ExperimentReport& report);
std::string to_text(const ExperimentReport& report);

/// Summary columns mean, stderr, ci_lo, ci_hi appended to a row.
void append_summary(std::vector<double>& row, const MonteCarloSummary& s);

struct DualityConfig {
  std::vector<int> ladder{64, 256};
  int k = 2;
  collisions::TestFunction f = collisions::TestFunction::gaussian_bump(1.0, 1.0);
  long long walk_replicas = 10000;
  /// 0 skips estimate (c) and the bridge verdict.
  long long env_replicas = 10000;
  /// Required end-to-end shrink factor of |(a) - (b)|.
  double gap_shrink = 2.0;
  /// Chaos target at the largest N; skipped when unset.
  std::optional<chaos::WhiteNoiseGrid> chaos_grid;
  int chaos_order = 8;
  int chaos_replicas = 1000;
  double chaos_z = 3.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Estimates (a) E[exp(N^{-1/2} Pi_N(f))], (b) E[prod (1 + X_{N,n})] and
/// (c) E[z_N^k] with amplitude N^{-1/4} sqrt(f). Verdicts: exact_bridge
/// (99% CIs of (b) and (c) overlap at every N), asymptotic_gap and
/// chaos_target.
ExperimentReport duality_experiment(const DualityConfig& cfg);

struct ExpMomentConfig {
  double beta = 1.0;
  std::vector<int> ladder{64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384};
  long long replicas = 100000;
  double plateau_z = 3.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// E[exp(beta N^{-1/2} L^0_N)] along the ladder. Verdicts: finite, plateau
/// (last two values within plateau_z combined stderr).
ExperimentReport exponential_moment_probe(const ExpMomentConfig& cfg);

struct TightnessConfig {
  int k = 3;
  std::vector<int> ladder{64, 256, 1024};
  std::vector<double> m_ladder{1.0, 2.0, 4.0, 8.0};
  long long replicas = 100000;
  double final_level = 0.01;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// P(||Pi_N|| / sqrt N > m) and P(max |S| / sqrt N > m). Verdicts per
/// quantity: sup over N non-increasing in m and below final_level at the
/// largest m.
ExperimentReport tightness_probe(const TightnessConfig& cfg);

/// Nonnegative weights X_{N,1..N} for one replicate.
using WeightGenerator = std::function<std::vector<double>(int N, Stream& stream)>;

WeightGenerator zero_weights();
WeightGenerator deterministic_weights();  // X_{N,n} = 1/N
/// X_{N,n} from k independent walks at amplitude N^{-1/4} sqrt(f).
WeightGenerator polymer_weights(int k, const collisions::TestFunction& f);

struct ProductSumConfig {
  std::vector<int> ladder{64, 256, 1024};
  long long replicas = 100000;
  std::string generator = "polymer";
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Per replicate exp(sum X - sum X^2 / 2) <= prod (1 + X) <= exp(sum X).
/// Verdicts: sandwich (every replicate), concentration (99th percentile of
/// |prod / exp(sum) - 1| non-increasing along the ladder and smaller at the
/// end than at the start unless identically 0). Throws ContractError on a
/// negative weight.
ExperimentReport product_sum_property_check(const WeightGenerator& gen, const ProductSumConfig& cfg);

struct ConvergenceConfig {
  int k = 3;
  collisions::TestFunction f = collisions::TestFunction::gaussian_bump(1.0, 1.0);
  std::vector<int> ladder{64, 256, 1024};
  long long replicas = 10000;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Samples of N^{-1/2} Pi_N(f) and N^{-1/2} Pi'_N(f). Verdicts:
/// ks_consecutive (KS distance between consecutive levels decreasing),
/// merge (KS(Pi, Pi') at the largest N below the last consecutive distance,
/// or exactly 0), excess_decay (mean N^{-1/2} ||Pi - Pi'|| decreasing).
ExperimentReport convergence_study(const ConvergenceConfig& cfg);

struct PlateauConfig {
  int k = 2;
  collisions::TestFunction f = collisions::TestFunction::gaussian_bump(1.0, 1.0);
  std::vector<int> ladder{64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384};
  long long replicas = 400;
  double plateau_z = 3.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// E[z_N^k] at amplitude N^{-1/4} sqrt(f). Verdicts: plateau (last two
/// within plateau_z combined stderr) and no_blowup (not every step up by
/// more than plateau_z combined stderr).
ExperimentReport moment_plateau(const PlateauConfig& cfg);

struct ChaosConfig {
  chaos::WhiteNoiseGrid grid;
  double gamma = 0.7071067811865476;
  int order = 8;
  int k = 2;
  int replicas = 1000;
  double z = 3.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Moments of Z at constant amplitude gamma on a grid and its coarsening.
/// Verdicts: centered (first moment within 4 stderr of 1), second_moment
/// (extrapolated second moment within z stderr of the series).
ExperimentReport chaos_moments(const ChaosConfig& cfg);

}  // namespace collide::harness
