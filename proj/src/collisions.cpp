#include "collide/collisions.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "collide/errors.hpp"
#include "collide/numeric.hpp"
#include "collide/random.hpp"

namespace collide::collisions {

CollisionMeasure::CollisionMeasure(int N, int k, std::vector<Atom> atoms)
    : N_(N), k_(k), atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& a, const Atom& b) { return a.n != b.n ? a.n < b.n : a.z < b.z; });
  const int max_weight = k * (k - 1) / 2;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    if (a.n < 1 || a.n > N) throw ContractError("atom time outside [1, N]");
    if (((a.n - a.z) & 1) != 0) throw ContractError("atom violates the parity invariant");
    if (a.weight < 1 || a.weight > max_weight) throw ContractError("atom weight out of range");
    if (i > 0 && atoms_[i - 1].n == a.n && atoms_[i - 1].z == a.z)
      throw ContractError("duplicate atom");
  }
}

long long CollisionMeasure::total_mass() const noexcept {
  long long m = 0;
  for (const auto& a : atoms_) m += a.weight;
  return m;
}

TestFunction TestFunction::constant(double c) {
  return {[c](double, double) { return c; }, std::fabs(c), c >= 0.0, true};
}

TestFunction TestFunction::gaussian_bump(double alpha, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  return {[alpha, inv](double, double x) { return alpha * std::exp(-x * x * inv); },
          std::fabs(alpha), alpha >= 0.0, true};
}

TestFunction TestFunction::window(double c, double halfwidth) {
  return {[c, halfwidth](double, double x) { return std::fabs(x) <= halfwidth ? c : 0.0; },
          std::fabs(c), c >= 0.0, true};
}

void crowded_sites(const walks::WalkEnsemble& ensemble, int n, std::vector<SiteCount>& out) {
  out.clear();
  const int k = ensemble.k();
  if (k <= 16) {
    int buf[16];
    for (int i = 0; i < k; ++i) buf[i] = ensemble[i][n];
    std::sort(buf, buf + k);
    for (int i = 0; i < k;) {
      int j = i + 1;
      while (j < k && buf[j] == buf[i]) ++j;
      if (j - i >= 2) out.push_back({buf[i], j - i});
      i = j;
    }
    return;
  }
  std::unordered_map<int, int> counts;
  counts.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) ++counts[ensemble[i][n]];
  for (const auto& [z, c] : counts) {
    if (c >= 2) out.push_back({z, c});
  }
  std::sort(out.begin(), out.end(), [](const SiteCount& a, const SiteCount& b) { return a.z < b.z; });
}

CollisionPair detect_collisions(const walks::WalkEnsemble& ensemble) {
  const int N = ensemble.horizon();
  std::vector<Atom> multi;
  std::vector<Atom> distinct;
  std::vector<SiteCount> sites;
  for (int n = 1; n <= N; ++n) {
    crowded_sites(ensemble, n, sites);
    for (const auto& s : sites) {
      multi.push_back({n, s.z, s.count * (s.count - 1) / 2});
      distinct.push_back({n, s.z, 1});
    }
  }
  return {CollisionMeasure(N, ensemble.k(), std::move(multi)),
          CollisionMeasure(N, ensemble.k(), std::move(distinct))};
}

double integrate(const CollisionMeasure& measure, const TestFunction& f) {
  const double N = measure.horizon();
  const double sqrtN = std::sqrt(N);
  CompensatedSum sum;
  for (const auto& a : measure.atoms()) sum += a.weight * f(a.n / N, a.z / sqrtN);
  return sum.value();
}

std::pair<long long, long long> total_mass_identity_check(const walks::WalkEnsemble& ensemble) {
  if (ensemble.k() != 2) throw WrongEnsembleSize("total_mass_identity_check requires k = 2");
  const auto measures = detect_collisions(ensemble);
  long long zeros = 0;
  for (int n = 1; n <= ensemble.horizon(); ++n) zeros += ensemble[0][n] - ensemble[1][n] == 0;
  return {measures.with_multiplicity.total_mass(), zeros};
}

void write_csv(std::ostream& os, const CollisionMeasure& measure) {
  os << "# N=" << measure.horizon() << " k=" << measure.walks() << " hash=" << kHashName << "-v"
     << kHashVersion << "\n";
  os << "n,z,weight\n";
  for (const auto& a : measure.atoms()) os << a.n << ',' << a.z << ',' << a.weight << '\n';
}

}  // namespace collide::collisions
