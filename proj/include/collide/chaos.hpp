#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "collide/environment.hpp"
#include "collide/stats.hpp"

namespace collide::chaos {

/// Discretized white noise on [0,1] x [-L, L]. Time cells ((j-1)dt, j dt],
/// j = 1..1/dt; space cells [l dx, (l+1) dx), l = -X..X-1, X = ceil(L / dx).
struct WhiteNoiseGrid {
  double dt = 1.0 / 32;
  double dx = 1.0 / 8;
  double L = 6.0;
  std::uint64_t seed = 0;

  int time_cells() const;
  int space_cells() const;
  double area() const noexcept { return dt * dx; }
  double t_center(int j) const noexcept { return (j + 0.5) * dt; }
  double x_center(int l) const;
  /// Same seed, dt and dx doubled.
  WhiteNoiseGrid coarser() const;
  /// Throws DomainError unless dt, dx, L > 0 and 1/dt is an integer.
  void validate() const;
};

/// Gaussian cell masses, row-major by time cell.
struct NoiseSample {
  int T = 0;
  int S = 0;
  std::vector<double> xi;

  double at(int j, int l) const noexcept { return xi[static_cast<std::size_t>(j) * S + l]; }
};

/// Independent N(0, dt dx) masses drawn from the grid seed.
NoiseSample sample_noise(const WhiteNoiseGrid& grid);

/// Masses of the grid with dt and dx doubled, as sums of 2x2 blocks. Needs
/// an even number of time cells.
NoiseSample coarsen(const NoiseSample& fine);

struct ChaosApproximation {
  std::vector<double> terms;  // orders 0..M, term_0 = 1
  double value = 1.0;
  /// sum_{n > M} sup|a|^{2n} ||rho_n||^2
  double truncation_bound = 0.0;

  int order() const noexcept { return static_cast<int>(terms.size()) - 1; }
};

/// Forward recursion over chaos orders with midpoint kernels and strict time
/// ordering. Throws ResolutionError if dt >= 1/M or dx > sqrt(dt).
ChaosApproximation simulate_Z(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid, int M);
ChaosApproximation simulate_Z(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid,
                              const NoiseSample& noise, int M);

/// E[Z^2] of the truncated grid approximation, exactly, plus its per-order
/// split (entry n is E[term_n^2]).
std::vector<double> discrete_second_moments(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid,
                                            int M);

/// sum_n gamma^{2n} / (2^n Gamma(n/2 + 1)), summed until the tail bound is below tol.
double second_moment_series(double gamma, double tol = 1e-15);

/// Standard normal mass outside [-L, L].
double spatial_mass_loss(double L);

struct ZMoments {
  int k = 0;
  /// Entry p-1 is the p-th moment. `extrapolated` combines the fine and
  /// coarse values replicate by replicate, (2^r Z_f^p - Z_c^p) / (2^r - 1)
  /// with r the refinement rate.
  std::vector<MonteCarloSummary> fine, coarse, extrapolated;
  /// |fine - coarse| per moment: the discretization diagnostic.
  std::vector<double> drift;
  double truncation_bound = 0.0;
  double spatial_loss = 0.0;
  double rate = 0.5;
};

struct ZReplica {
  std::uint64_t seed;
  ChaosApproximation fine;
  ChaosApproximation coarse;
};

/// Moments 1..k of Z over R >= 1000 independent grid seeds derived from
/// master. Each replica solves the given grid and its coarsening with the
/// same noise. Throws DomainError for R < 1000.
ZMoments estimate_Z_moments(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid, int M, int k,
                            int R, std::uint64_t master, int workers = 1, double rate = 0.5,
                            std::vector<ZReplica>* replicas = nullptr);

/// '#' header with dt, dx, L, M, then seed,value,term_0..term_M.
void write_replicas_csv(std::ostream& os, const WhiteNoiseGrid& grid, int M,
                        const std::vector<ZReplica>& replicas);

}  // namespace collide::chaos
