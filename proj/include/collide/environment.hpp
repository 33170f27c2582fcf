#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "collide/random.hpp"

namespace collide::environment {

/// Rademacher disorder omega(n, z) generated on demand by hashing
/// (seed, n, z). Nothing is materialized.
struct EnvironmentField {
  std::uint64_t seed = 0;

  int omega(int n, int z) const noexcept {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) << 32) |
        static_cast<std::uint32_t>(z);
    return (mix64(mix64(key ^ mix64(seed))) & 1U) ? 1 : -1;
  }
};

inline int omega_at(const EnvironmentField& field, int n, int z) noexcept {
  return field.omega(n, z);
}

/// Lattice amplitude A(n, z) with a declared sup bound.
struct DisorderFunction {
  std::function<double(int, int)> eval;
  double sup_bound = 0.0;
  /// A(n, z) does not depend on n. Lets sweeps cache one row.
  bool time_homogeneous = false;

  double operator()(int n, int z) const { return eval(n, z); }

  static DisorderFunction constant(double beta);
  /// Independent uniform values on [-c, c], hashed from (seed, n, z).
  static DisorderFunction random_uniform(std::uint64_t seed, double c);
  /// s * A.
  DisorderFunction scaled(double s) const;
};

/// Continuum amplitude a(t, x) on [0,1] x R.
struct ContinuumAmplitude {
  std::function<double(double, double)> eval;
  double sup_bound = 0.0;
  bool time_homogeneous = false;

  double operator()(double t, double x) const { return eval(t, x); }

  static ContinuumAmplitude constant(double gamma);
};

/// A_N(n, z) = a(n / N, z / sqrt(N)).
DisorderFunction disorder_from_function(const ContinuumAmplitude& a, int N);

/// The lattice cell [t, x]_N: i = ceil(N t) and the unique z of the parity
/// of i with x in ((z - 1) / sqrt N, (z + 1) / sqrt N]. Throws DomainError
/// unless 0 < t <= 1.
std::pair<int, int> cell_of(double t, double x, int N);

}  // namespace collide::environment
