#pragma once

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace prefopt {

// Counter-based splittable RNG. Every draw is a pure function of
// (seed, purpose tag, counter), so independent streams never interact
// and generation order does not matter.
class SplitRng {
 public:
  SplitRng(std::uint64_t seed, std::string_view tag)
      : key_(mix(seed ^ fnv1a(tag))) {}

  std::uint64_t bits(std::uint64_t counter) const { return mix(key_ + 0x9e3779b97f4a7c15ull * (counter + 1)); }

  // Uniform in [0, 1).
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t counter, std::uint64_t n) const {
    return static_cast<std::uint64_t>(uniform(counter) * static_cast<double>(n));
  }

  // Standard normal via Box-Muller; consumes counters 2k and 2k+1.
  double normal(std::uint64_t counter) const;

  // Deterministic Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<std::size_t> permutation(std::size_t n) const;

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::uint64_t key_;
};

}  // namespace prefopt
