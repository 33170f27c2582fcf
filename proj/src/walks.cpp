#include "collide/walks.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "collide/errors.hpp"
#include "collide/numeric.hpp"

namespace collide::walks {

WalkPath::WalkPath(std::vector<int> positions) : pos_(std::move(positions)) {
  if (pos_.empty() || pos_.front() != 0) throw InvalidPath("walk must start at 0");
  for (std::size_t n = 1; n < pos_.size(); ++n) {
    if (std::abs(pos_[n] - pos_[n - 1]) != 1)
      throw InvalidPath("non-unit increment at step " + std::to_string(n));
  }
}

WalkEnsemble::WalkEnsemble(std::vector<WalkPath> walks) : walks_(std::move(walks)) {
  if (walks_.size() < 2) throw WrongEnsembleSize("an ensemble needs k >= 2 walks");
  const int N = walks_.front().horizon();
  for (const auto& w : walks_) {
    if (w.horizon() != N) throw InvalidPath("walks in an ensemble must share the horizon");
  }
}

WalkPath sample_walk(int N, Stream& stream) {
  if (N < 0) throw DomainError("horizon must be nonnegative");
  std::vector<int> pos(static_cast<std::size_t>(N) + 1);
  int s = 0;
  std::uint64_t word = 0;
  int left = 0;
  for (int n = 1; n <= N; ++n) {
    if (left == 0) {
      word = stream.bits();
      left = 64;
    }
    s += static_cast<int>(word & 1U) * 2 - 1;
    word >>= 1;
    --left;
    pos[static_cast<std::size_t>(n)] = s;
  }
  return WalkPath(std::move(pos), WalkPath::Unchecked{});
}

WalkEnsemble sample_ensemble(int k, int N, Stream& stream) {
  std::vector<WalkPath> walks;
  walks.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) walks.push_back(sample_walk(N, stream));
  return WalkEnsemble(std::move(walks));
}

std::vector<std::pair<WalkPath, double>> enumerate_paths(int N) {
  if (N > kMaxEnumerationHorizon)
    throw HorizonTooLarge("enumerate_paths: N = " + std::to_string(N) + " exceeds " +
                          std::to_string(kMaxEnumerationHorizon));
  if (N < 0) throw DomainError("horizon must be nonnegative");
  const std::uint64_t count = std::uint64_t{1} << N;
  const double prob = std::ldexp(1.0, -N);
  std::vector<std::pair<WalkPath, double>> out;
  out.reserve(count);
  for (std::uint64_t code = 0; code < count; ++code) {
    std::vector<int> pos(static_cast<std::size_t>(N) + 1);
    int s = 0;
    for (int n = 1; n <= N; ++n) {
      s += ((code >> (n - 1)) & 1U) ? 1 : -1;
      pos[static_cast<std::size_t>(n)] = s;
    }
    out.emplace_back(WalkPath(std::move(pos), WalkPath::Unchecked{}), prob);
  }
  return out;
}

std::vector<double> return_time_pmf(int kmax) {
  if (kmax < 1) throw DomainError("return_time_pmf: kmax must be >= 1");
  std::vector<double> pmf(static_cast<std::size_t>(kmax));
  for (int k = 1; k <= kmax; ++k) {
    const double logp = (1.0 - 2.0 * k) * std::log(2.0) - std::log(static_cast<double>(k)) +
                        log_choose(2LL * k - 2, k - 1);
    pmf[static_cast<std::size_t>(k - 1)] = std::exp(logp);
  }
  return pmf;
}

int local_time_zero(const WalkPath& path, int upTo) {
  if (upTo < 0 || upTo > path.horizon()) throw DomainError("local_time_zero: upTo out of range");
  int count = 0;
  for (int n = 1; n <= upTo; ++n) count += path[n] == 0;
  return count;
}

int first_return_time(const WalkPath& path) {
  for (int n = 1; n <= path.horizon(); ++n) {
    if (path[n] == 0) return n;
  }
  return 0;
}

}  // namespace collide::walks
