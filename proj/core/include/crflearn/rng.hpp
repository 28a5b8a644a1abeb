#pragma once

#include <cstdint>
#include <random>

namespace crflearn {

// splitmix64 step; used to derive independent sub-stream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ (stream * 0xd6e8feb86659fd93ULL));
}

/// Deterministic, portable random source: std::mt19937_64 (fully specified by
/// the standard) with hand-rolled uniform mappings, so the produced streams
/// are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // [0, n); multiply-high mapping (bias < n / 2^64, negligible for our n).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  int next_int(int n) { return static_cast<int>(next_below(static_cast<std::uint64_t>(n))); }

  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crflearn
