#include "collide/environment.hpp"

#include <algorithm>
#include <cmath>

#include "collide/errors.hpp"

namespace collide::environment {

namespace {

// Integer nearest to v when v is within rounding noise of it, else v.
double snap(double v) {
  const double r = std::nearbyint(v);
  return std::fabs(v - r) <= 1e-9 * std::fmax(1.0, std::fabs(v)) ? r : v;
}

}  // namespace

DisorderFunction DisorderFunction::constant(double beta) {
  return {[beta](int, int) { return beta; }, std::fabs(beta), true};
}

DisorderFunction DisorderFunction::random_uniform(std::uint64_t seed, double c) {
  const std::uint64_t salt = mix64(seed ^ 0xa5a5a5a5deadbeefULL);
  return {[salt, c](int n, int z) {
            const std::uint64_t key =
                (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) << 32) |
                static_cast<std::uint32_t>(z);
            const double u = static_cast<double>(mix64(mix64(key ^ salt)) >> 11) * 0x1.0p-53;
            return c * (2.0 * u - 1.0);
          },
          std::fabs(c), false};
}

DisorderFunction DisorderFunction::scaled(double s) const {
  return {[inner = eval, s](int n, int z) { return s * inner(n, z); }, std::fabs(s) * sup_bound,
          time_homogeneous};
}

ContinuumAmplitude ContinuumAmplitude::constant(double gamma) {
  return {[gamma](double, double) { return gamma; }, std::fabs(gamma), true};
}

DisorderFunction disorder_from_function(const ContinuumAmplitude& a, int N) {
  if (N < 1) throw DomainError("disorder_from_function: N must be >= 1");
  const double dN = N;
  const double sqrtN = std::sqrt(dN);
  return {[f = a.eval, dN, sqrtN](int n, int z) { return f(n / dN, z / sqrtN); }, a.sup_bound,
          a.time_homogeneous};
}

std::pair<int, int> cell_of(double t, double x, int N) {
  if (!(t > 0.0) || t > 1.0) throw DomainError("cell_of: t must lie in (0, 1]");
  if (N < 1) throw DomainError("cell_of: N must be >= 1");
  const int i = std::max(1, static_cast<int>(std::ceil(snap(N * t))));
  // z ranges over [s - 1, s + 1): two consecutive integers, one per parity.
  const double s = snap(x * std::sqrt(static_cast<double>(N)));
  int z = static_cast<int>(std::ceil(s - 1.0));
  if (((z - i) & 1) != 0) ++z;
  return {i, z};
}

}  // namespace collide::environment
