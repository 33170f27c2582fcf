#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace collide {

/// Hardware threads, at least 1.
inline int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Calls fn(i) for i in [0, count) on up to `workers` threads and returns the
/// results in index order, so the output never depends on scheduling. The
/// exception of the lowest failing index is rethrown.
template <class Fn>
auto parallel_map(std::size_t count, int workers, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  auto run = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  if (threads == 1 || count < 2) {
    run(next);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(run, std::ref(next));
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace collide
