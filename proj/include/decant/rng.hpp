#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace decant {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Mixes a base seed with stream coordinates (client id, iteration, purpose tag)
// so independent streams never depend on call order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags for derive_seed.
enum class Stream : std::uint64_t {
  kScenario = 1,
  kPartition = 2,
  kModelInit = 3,
  kLocalTrain = 4,
  kSynthetic = 5,
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream s,
                                 std::initializer_list<std::uint64_t> parts = {}) {
  std::uint64_t h = derive_seed(base, {static_cast<std::uint64_t>(s)});
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

// Uniform double in [lo, hi) built from raw 53-bit draws; independent of the
// standard library's distribution implementation.
inline double uniform_real(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace decant
