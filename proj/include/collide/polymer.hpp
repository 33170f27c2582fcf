#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "collide/collisions.hpp"
#include "collide/environment.hpp"
#include "collide/ustat.hpp"
#include "collide/walks.hpp"

namespace collide::polymer {

struct PartitionResult {
  double value = 1.0;
  int N = 0;
  /// Chaos-order contributions 0..N, when requested.
  std::optional<std::vector<double>> term_breakdown;
};

/// E[prod_{n<=N} (1 + A(n, S_n) omega(n, S_n)) | omega] by the forward
/// recursion over the parity band. O(N^2) time, O(N) memory.
PartitionResult partition_dp(int N, const environment::DisorderFunction& A,
                             const environment::EnvironmentField& field, bool breakdown = false);

/// Brute force over all 2^N paths. Throws HorizonTooLarge for N > 20.
double partition_enumerated(int N, const environment::DisorderFunction& A,
                            const environment::EnvironmentField& field);

enum class ChaosEngine { Exact, Recursive };

inline constexpr int kMaxExactChaosHorizon = 14;

/// term_n = beta^n sum_{i in D^N_n} sum_z p_n(i, z) A(i, z) omega(i, z).
struct ChaosTerms {
  std::vector<double> terms;  // orders 0..M
  /// Bound on |sum of the orders above M|; 0 when M >= N.
  double truncation_bound = 0.0;

  int order() const noexcept { return static_cast<int>(terms.size()) - 1; }
  /// Sum of orders 0..upto. Throws TruncationOrderError if upto > M.
  double sum(int upto) const;
  double sum() const { return sum(order()); }
};

/// Exact engine: enumeration of every chain, N <= 14 (else HorizonTooLarge).
/// Recursive engine: order-resolved weights, O(M N^2); M < 0 means M = N.
ChaosTerms chaos_terms(int N, double beta, const environment::DisorderFunction& A,
                       const environment::EnvironmentField& field, ChaosEngine engine = ChaosEngine::Recursive,
                       int M = -1);

/// S^N_n(p^N_n) for n = 1..N, compiled once: chains restricted to
/// |z_1| <= i_1 and |z_j - z_{j-1}| <= i_j - i_{j-1}.
std::vector<ustat::UStatPlan> chaos_identity_plans(int N, const environment::DisorderFunction& A);

/// 1 + sum_n 2^{n/2} beta^n S^N_n(p^N_n), which equals partition_dp with A scaled by beta.
double chaos_identity_value(const std::vector<ustat::UStatPlan>& plans, double beta,
                            const environment::EnvironmentField& field);

/// sum_{m > M} C(N, m) x^m, the tail bound with x = |beta| c.
double chaos_tail_bound(int N, int M, double x);

struct CollisionWeights {
  std::vector<double> per_step;  // X_{N,1..N}
  double sum = 0.0;              // T_N
};

/// 1 + X_{N,n} = prod over occupied sites of ((1 + theta)^m + (1 - theta)^m) / 2,
/// theta = A(n, z) already carrying the N^{-1/4} scale.
CollisionWeights collision_weights(const walks::WalkEnsemble& ensemble, const environment::DisorderFunction& A);

/// The scaled amplitude N^{-1/4} sqrt(f(n/N, z/sqrt N)). Throws NegativityError
/// at any cell where f is negative.
environment::DisorderFunction duality_amplitude(const collisions::TestFunction& f, int N);

struct DualityPair {
  double exp_pi = 1.0;   // exp(N^{-1/2} Pi_N(f))
  double prod_x = 1.0;   // prod (1 + X_{N,n})
  double scaled_pi = 0.0;
  double t_sum = 0.0;    // T_N
};

DualityPair duality_pair(const walks::WalkEnsemble& ensemble, const collisions::TestFunction& f);

struct ReplicateRow {
  std::uint64_t seed;
  int N;
  double value;
  double power;
};

/// Per-replicate rows (seed,N,value,value^k) under a '#' metadata line.
void write_replicates_csv(std::ostream& os, const std::vector<ReplicateRow>& rows, int k,
                          const std::string& amplitude);

}  // namespace collide::polymer
