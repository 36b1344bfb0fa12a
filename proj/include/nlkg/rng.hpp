#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, index, draw counter), so sample i can be produced on any
// thread without touching shared state.

#include <cstdint>

namespace nlkg {

namespace streams {
inline constexpr std::uint64_t potential = 0x706f74656e7469ULL;
inline constexpr std::uint64_t scan = 0x7363616e0000ULL;
inline constexpr std::uint64_t initial_data = 0x696e69740000ULL;
inline constexpr std::uint64_t tests = 0x746573747300ULL;
}  // namespace streams

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0)
      : key_(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)) {}

  std::uint64_t next_u64() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nlkg
