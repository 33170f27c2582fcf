#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "collide/random.hpp"

namespace collide::kernels {

/// Point (t, x) of [0,1]^n x R^n with implicit t_0 = 0, x_0 = 0.
struct SimplexPoint {
  std::vector<double> t;
  std::vector<double> x;

  std::size_t order() const noexcept { return t.size(); }
  /// 0 < t_1 < ... < t_n <= 1.
  bool in_simplex() const noexcept;
};

/// Lattice chain (i, z) with i_1 < ... < i_n.
struct LatticeChain {
  std::vector<int> times;
  std::vector<int> sites;

  std::size_t order() const noexcept { return times.size(); }
};

/// Monte-Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
};

/// Integrand on [0,1]^n x R^n.
using Integrand = std::function<double(std::span<const double> t, std::span<const double> x)>;

/// p(i, x) = P(S_i = x).
double rw_transition(int i, long long x);

/// Gaussian heat kernel; throws DomainError for t <= 0.
double heat_kernel(double t, double x);

/// prod_j p(i_j - i_{j-1}, z_j - z_{j-1}); 0 off the integer simplex.
double chain_density_discrete(const LatticeChain& chain);

/// prod_j rho(t_j - t_{j-1}, x_j - x_{j-1}); 0 off the real simplex.
double chain_density_gaussian(const SimplexPoint& pt);

/// p^N_n(t, x) = 2^-n p_n([t, x]_N) when ceil(N t) is strictly increasing.
double discrete_kernel_pNn(const SimplexPoint& pt, int N, int n);

/// Mean of g over the lattice rectangle containing pt, rectangles of
/// width 1/N in each time and 2/sqrt(N) in each space coordinate, using a
/// tensor Gauss-Legendre rule with `nodes` points per axis. Throws
/// QuadratureFailure if g is not finite at a node.
double block_average(const Integrand& g, const SimplexPoint& pt, int N, int nodes = 4);

/// Same average over the rectangle of lattice cell (i, z), given directly.
double block_average_cell(const Integrand& g, std::span<const int> times, std::span<const int> sites,
                          int N, int nodes = 4);

/// ||rho_n||_2^2 over the simplex times R^n, = 1 / (2^n Gamma(n/2 + 1)).
double rho_chain_norm_sq(int n);

/// Importance-sampled ||rho_n||_2^2: times from a stick-breaking proposal
/// with density proportional to prod (gap * remainder)^(-1/2), positions
/// from the chain density itself.
Estimate rho_chain_norm_sq_mc(int n, long long samples, Stream& stream);

/// Exact ||N^{n/2} p^N_n||_2^2 as a lattice sum.
double scaled_pNn_norm_sq(int n, int N);

/// Monte-Carlo estimate of ||rho_n - N^{n/2} p^N_n||_2 (value is the norm,
/// not its square). n in {1, 2, 3}; budget >= 1e4 samples.
Estimate local_clt_l2_error(int n, int N, long long budget, Stream& stream);

struct NormRow {
  int n;
  double closed_form;
  Estimate mc;
};

void write_norm_table_csv(std::ostream& os, std::span<const NormRow> rows);

}  // namespace collide::kernels
