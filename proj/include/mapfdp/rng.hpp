#pragma once

#include <cstdint>
#include <random>

namespace mapfdp {

//! The one generator used everywhere. mt19937_64's output sequence is fixed by
//! the standard, unlike the std distributions, so all sampling below goes
//! through the helpers in this file to stay reproducible across toolchains.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

//! Counter-based seed split: stream `index` of `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

//! Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

//! Uniform integer in [0, n), rejection sampled (no modulo bias).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n)
{
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

//! Fisher-Yates over a random-access range.
template <typename Container>
void shuffle(Container& items, Rng& rng)
{
  for (std::size_t k = items.size(); k > 1; --k) {
    const auto pick = static_cast<std::size_t>(uniform_index(rng, k));
    using std::swap;
    swap(items[k - 1], items[pick]);
  }
}

}  // namespace mapfdp
