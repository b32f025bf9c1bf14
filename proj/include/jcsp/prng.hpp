#pragma once

#include <cstdint>
#include <random>

namespace jcsp {

/// Counter-based sub-seed derivation. All randomness in the project flows
/// from one master seed; independent streams are derived by (seed, stream)
/// pairs so that replications and grid runs are auditable.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x51ed270b0a1ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream = 0) {
  return std::mt19937_64(derive_seed(master, stream));
}

}  // namespace jcsp
