#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace collide {

/// log(n choose r) via lgamma; -inf when r is out of range.
inline double log_choose(long long n, long long r) {
  if (r < 0 || r > n || n < 0) return -INFINITY;
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(r) + 1.0) -
         std::lgamma(static_cast<double>(n - r) + 1.0);
}

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

/// Pairwise (tree) reduction. The result depends only on the order of `xs`.
inline double tree_sum(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return tree_sum(xs.first(half)) + tree_sum(xs.subspan(half));
}

}  // namespace collide
