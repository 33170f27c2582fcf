#pragma once

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "collide/walks.hpp"

namespace collide::collisions {

struct Atom {
  int n = 0;
  int z = 0;
  int weight = 1;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Atomic measure on lattice collision events. Atoms are sorted by (n, z)
/// and hold raw integer coordinates; rescaling happens in integrate().
class CollisionMeasure {
 public:
  CollisionMeasure(int N, int k, std::vector<Atom> atoms);

  int horizon() const noexcept { return N_; }
  int walks() const noexcept { return k_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  bool empty() const noexcept { return atoms_.empty(); }

  /// Sum of weights.
  long long total_mass() const noexcept;

  friend bool operator==(const CollisionMeasure&, const CollisionMeasure&) = default;

 private:
  int N_;
  int k_;
  std::vector<Atom> atoms_;
};

/// Bounded test function f(t, x) on [0,1] x R.
struct TestFunction {
  std::function<double(double, double)> eval;
  double bound = 1.0;
  bool nonneg = false;
  /// f(t, x) does not depend on t.
  bool time_homogeneous = false;

  double operator()(double t, double x) const { return eval(t, x); }

  static TestFunction constant(double c);
  /// alpha * exp(-x^2 / (2 sigma^2)).
  static TestFunction gaussian_bump(double alpha, double sigma);
  /// c on [0,1] x [-halfwidth, halfwidth], 0 elsewhere.
  static TestFunction window(double c, double halfwidth);
};

/// Number of walks on one site at one time.
struct SiteCount {
  int z;
  int count;
};

/// Sites at time n holding at least two walks, sorted by z.
void crowded_sites(const walks::WalkEnsemble& ensemble, int n, std::vector<SiteCount>& out);

struct CollisionPair {
  CollisionMeasure with_multiplicity;
  CollisionMeasure distinct;
};

CollisionPair detect_collisions(const walks::WalkEnsemble& ensemble);

/// Sum over atoms of weight * f(n/N, z/sqrt(N)).
double integrate(const CollisionMeasure& measure, const TestFunction& f);

/// Total mass of the with-multiplicity measure and the zero count of the
/// difference walk, for k = 2. Throws WrongEnsembleSize otherwise.
std::pair<long long, long long> total_mass_identity_check(const walks::WalkEnsemble& ensemble);

/// CSV with a '#' header line carrying N, k and the columns n,z,weight.
void write_csv(std::ostream& os, const CollisionMeasure& measure);

}  // namespace collide::collisions
