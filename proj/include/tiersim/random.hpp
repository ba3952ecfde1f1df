#pragma once

#include <cstdint>
#include <random>

namespace tiersim {

using Rng = std::mt19937_64;

// Independent subsystem streams derived from one scenario seed.
enum class Stream : std::uint64_t {
  population = 1,
  requests = 2,
  dynamics = 3,
  injection = 4,
};

// splitmix64 finalizer over (seed, stream) so neighbouring seeds do not
// produce correlated streams.
inline Rng make_rng(std::uint64_t seed, Stream stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return Rng(z);
}

}  // namespace tiersim
