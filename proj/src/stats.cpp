#include "collide/stats.hpp"

#include <cmath>
#include <string>

#include "collide/errors.hpp"
#include "collide/numeric.hpp"

namespace collide {

MonteCarloSummary summarize(std::span<const double> xs, bool central_moments) {
  if (xs.size() < 2) throw DomainError("summarize needs at least 2 samples");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i])) throw NonFiniteSample("sample " + std::to_string(i) + " is not finite");
  const double n = static_cast<double>(xs.size());
  MonteCarloSummary s;
  s.n = static_cast<long long>(xs.size());
  s.mean = tree_sum(xs) / n;
  std::vector<double> d2(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) d2[i] = (xs[i] - s.mean) * (xs[i] - s.mean);
  const double var = tree_sum(d2) / (n - 1.0);
  s.std_err = std::sqrt(var / n);
  s.ci_lo = s.mean - kZ99 * s.std_err;
  s.ci_hi = s.mean + kZ99 * s.std_err;
  if (central_moments) {
    std::vector<double> m(3);
    m[0] = tree_sum(d2) / n;
    std::vector<double> d(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) d[i] = d2[i] * (xs[i] - s.mean);
    m[1] = tree_sum(d) / n;
    for (std::size_t i = 0; i < xs.size(); ++i) d[i] = d2[i] * d2[i];
    m[2] = tree_sum(d) / n;
    s.extra = std::move(m);
  }
  return s;
}

bool within_combined(const MonteCarloSummary& a, const MonteCarloSummary& b, double z) {
  return std::fabs(a.mean - b.mean) <= z * std::hypot(a.std_err, b.std_err);
}

bool ci_overlap(const MonteCarloSummary& a, const MonteCarloSummary& b) {
  return a.ci_lo <= b.ci_hi && b.ci_lo <= a.ci_hi;
}

}  // namespace collide
