#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace collide {

/// Identity of the hash used for seeds and for the disorder field. Recorded
/// in every output header.
inline constexpr const char* kHashName = "splitmix64-fmix";
inline constexpr int kHashVersion = 1;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the substream addressed by `path` under `master`. Each level
/// of the path is folded through mix64, so (master, r) pairs never collide
/// for distinct r.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master);
  for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Deterministic random stream. Same seed, same sequence.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  static Stream substream(std::uint64_t master, std::uint64_t replica) {
    return Stream(derive_seed(master, {replica}));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace collide
