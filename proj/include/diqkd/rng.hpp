// Counter-based random number generation. Every draw is a pure function of
// (seed, index, purpose, draw counter), so any round of a simulation can be
// regenerated independently of the others and results do not depend on the
// order in which rounds are evaluated.
#pragma once

#include <cstdint>

namespace diqkd {

// Purpose tags keep independent random streams from colliding even when they
// share a seed and a round index.
enum class RngPurpose : std::uint64_t {
  basis_alice = 1,
  basis_bob = 2,
  outcome = 3,
  ec_hash = 4,
  toeplitz = 5,
  test = 6,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace detail

class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t index, RngPurpose purpose,
                     std::uint64_t draw = 0) const {
    std::uint64_t h = detail::splitmix64(seed_ ^ 0x6a09e667f3bcc908ULL);
    h = detail::splitmix64(h ^ index);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = detail::splitmix64(h ^ draw);
    return h;
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform(std::uint64_t index, RngPurpose purpose,
                 std::uint64_t draw = 0) const {
    return static_cast<double>(bits(index, purpose, draw) >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
};

} // namespace diqkd
