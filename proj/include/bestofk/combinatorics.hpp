#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <type_traits>

#include "bestofk/types.hpp"

namespace bestofk {

/// C(n, k) as a double. Exact product form up to n = 60, lgamma beyond.
inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  if (k > n - k) k = n - k;
  if (n <= 60) {
    double value = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
      value = value * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return std::round(value);
  }
  return std::exp(std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                  std::lgamma(static_cast<double>(n - k) + 1.0));
}

/// Calls f(const ArmSet&) for every k-subset of `pool` in lexicographic order
/// of positions. Stops early if f returns false (when f returns bool).
template <class F>
void for_each_combination(const ArmSet& pool, std::size_t k, F&& f) {
  const std::size_t n = pool.size();
  if (k > n) return;
  std::vector<std::size_t> pos(k);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  ArmSet current(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) current[i] = pool[pos[i]];
    if constexpr (std::is_same_v<decltype(f(current)), bool>) {
      if (!f(current)) return;
    } else {
      f(current);
    }
    // Advance to the next position vector.
    std::size_t i = k;
    while (i > 0 && pos[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++pos[i - 1];
    for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
  }
}

inline ArmSet iota_set(std::size_t n) {
  ArmSet all(n);
  std::iota(all.begin(), all.end(), Arm{0});
  return all;
}

}  // namespace bestofk
