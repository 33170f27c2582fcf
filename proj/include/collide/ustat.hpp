#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "collide/environment.hpp"
#include "collide/kernels.hpp"

namespace collide::ustat {

/// Everything needed to evaluate 2^{n/2} sum_{i in E^N_n} sum_{z <-> i}
/// gbar_N(i/N, z/sqrt N) A(i, z) omega(i, z).
struct UStatSpec {
  int n = 1;
  int N = 1;
  kernels::Integrand g;
  /// g vanishes unless |x_j| <= support_radius for every j.
  double support_radius = 1.0;
  environment::DisorderFunction A = environment::DisorderFunction::constant(1.0);

  /// g is constant on every lattice rectangle: its block average is its
  /// value at the rectangle centre.
  bool cell_constant = false;
  /// g vanishes unless the time cells are strictly increasing. Only
  /// ordered tuples are enumerated.
  bool ordered_support = false;
  /// g is symmetric under joint permutation of its arguments. Ordered
  /// tuples are enumerated and weighted by n!.
  bool symmetric = false;
  /// Gauss-Legendre nodes per axis for block averages.
  int quad_nodes = 3;
  /// Optional pruning: false means g vanishes for every completion of
  /// the partial tuple (times, sites).
  std::function<bool(std::span<const int> times, std::span<const int> sites)> prefix_feasible;
};

inline constexpr double kMaxCells = 1e8;

/// One nonzero summand: coefficient times the product of omega over cells.
struct Term {
  double coef;
  std::uint32_t offset;  // into UStatPlan::cells
};

/// Compiled U-statistic: block averages and amplitudes are evaluated once
/// and reused across environment seeds.
class UStatPlan {
 public:
  explicit UStatPlan(const UStatSpec& spec);

  int order() const noexcept { return n_; }
  std::size_t terms() const noexcept { return terms_.size(); }

  double evaluate(const environment::EnvironmentField& field) const;

  /// E[S^2] over the Rademacher field, exactly: terms sharing a cell set are
  /// merged before squaring.
  double exact_second_moment() const;

 private:
  int n_;
  std::vector<Term> terms_;
  std::vector<int> cells_;  // (time, site) pairs, n per term
};

/// Evaluates the U-statistic directly. Throws ComplexityGuard when the
/// enumeration would exceed 1e8 cells.
double u_statistic(const UStatSpec& spec, const environment::EnvironmentField& field);

struct MomentEstimate {
  double value = 0.0;
  double std_err = 0.0;
};

struct MomentSuite {
  int replicas = 0;
  MomentEstimate mean;
  /// E[S^2] estimated as the mean of S^2 (the mean is known to be 0).
  MomentEstimate second_moment;
  double exact_second_moment = 0.0;
  /// c^{2n} N^{3n/2} ||g||_2^2, times n! unless the support is ordered.
  double l2_bound = 0.0;
  /// E[S_{n1} S_{n2}] when a second order was supplied.
  std::optional<MomentEstimate> cross_moment;

  bool mean_ok = false;
  bool second_moment_ok = false;
  bool bound_ok = false;
  bool cross_ok = true;
  bool passed() const noexcept { return mean_ok && second_moment_ok && bound_ok && cross_ok; }
};

/// Replicates the U-statistic over R >= 1000 environment seeds derived from
/// `master_seed`. `g_norm_sq` is the caller's exact ||g||_2^2. When `other`
/// is given, its plan is evaluated on the same fields for the cross moment.
MomentSuite ustat_moment_suite(const UStatSpec& spec, double g_norm_sq, int replicas,
                               std::uint64_t master_seed, const UStatSpec* other = nullptr);

}  // namespace collide::ustat
