#include "prefopt/rng.hpp"

#include <cmath>

namespace prefopt {

double SplitRng::normal(std::uint64_t counter) const {
  // Clamp away from 0 so the log stays finite.
  double u1 = std::max(uniform(2 * counter), 0x1.0p-53);
  double u2 = uniform(2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<std::size_t> SplitRng::permutation(std::size_t n) const {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(below(i, i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace prefopt
