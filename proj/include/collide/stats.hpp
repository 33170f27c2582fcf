#pragma once

#include <optional>
#include <span>
#include <vector>

namespace collide {

inline constexpr double kZ99 = 2.5758293035489;

struct MonteCarloSummary {
  long long n = 0;
  double mean = 0.0;
  double std_err = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  /// Sample central moments 2..4, when requested.
  std::optional<std::vector<double>> extra;

  double half_width() const noexcept { return ci_hi - mean; }
};

/// Mean, stderr = sd / sqrt(n) and the 99% interval. Sums are tree
/// reductions in input order. Throws NonFiniteSample on NaN or inf, and
/// DomainError for fewer than 2 samples.
MonteCarloSummary summarize(std::span<const double> xs, bool central_moments = false);

/// |a.mean - b.mean| <= z * sqrt(a.se^2 + b.se^2).
bool within_combined(const MonteCarloSummary& a, const MonteCarloSummary& b, double z);

bool ci_overlap(const MonteCarloSummary& a, const MonteCarloSummary& b);

}  // namespace collide
