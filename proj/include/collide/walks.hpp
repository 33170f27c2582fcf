#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "collide/random.hpp"

namespace collide::walks {

/// Positions S_0..S_N of a simple symmetric walk started at 0.
class WalkPath {
 public:
  WalkPath() : pos_{0} {}

  /// Validates S_0 = 0 and unit increments; throws InvalidPath otherwise.
  explicit WalkPath(std::vector<int> positions);

  int horizon() const noexcept { return static_cast<int>(pos_.size()) - 1; }
  int operator[](int n) const noexcept { return pos_[static_cast<std::size_t>(n)]; }
  std::span<const int> positions() const noexcept { return pos_; }

  friend bool operator==(const WalkPath&, const WalkPath&) = default;

 private:
  struct Unchecked {};
  WalkPath(std::vector<int> positions, Unchecked) : pos_(std::move(positions)) {}
  friend WalkPath sample_walk(int, Stream&);
  friend std::vector<std::pair<WalkPath, double>> enumerate_paths(int);

  std::vector<int> pos_;
};

/// k >= 2 walks sharing one horizon.
class WalkEnsemble {
 public:
  explicit WalkEnsemble(std::vector<WalkPath> walks);

  int k() const noexcept { return static_cast<int>(walks_.size()); }
  int horizon() const noexcept { return walks_.front().horizon(); }
  const WalkPath& operator[](int i) const noexcept { return walks_[static_cast<std::size_t>(i)]; }
  std::span<const WalkPath> walks() const noexcept { return walks_; }

 private:
  std::vector<WalkPath> walks_;
};

inline constexpr int kMaxEnumerationHorizon = 20;

WalkPath sample_walk(int N, Stream& stream);

/// k independent walks drawn from one stream.
WalkEnsemble sample_ensemble(int k, int N, Stream& stream);

/// All 2^N paths with probability 2^-N each. Throws HorizonTooLarge for N > 20.
std::vector<std::pair<WalkPath, double>> enumerate_paths(int N);

/// P(T_1 = 2k) for k = 1..kmax, where T_1 is the first return time to 0.
std::vector<double> return_time_pmf(int kmax);

/// #{1 <= n <= upTo : S_n = 0}.
int local_time_zero(const WalkPath& path, int upTo);

/// First n >= 1 with S_n = 0, or 0 if the path never returns.
int first_return_time(const WalkPath& path);

}  // namespace collide::walks
