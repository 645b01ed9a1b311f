#include "bestofk/rng.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

namespace bestofk {

namespace {
__extension__ typedef unsigned __int128 uint128;
}  // namespace

std::size_t Rng::below(std::size_t bound) {
  // Lemire's nearly-divisionless method.
  const std::uint64_t range = bound;
  uint128 m = static_cast<uint128>(engine_()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<uint128>(engine_()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

ArmSet Rng::sample_subset(std::span<const Arm> pool, std::size_t count) {
  if (count > pool.size()) {
    throw InfeasibleError("cannot draw " + std::to_string(count) + " arms from a pool of " +
                          std::to_string(pool.size()));
  }
  ArmSet scratch(pool.begin(), pool.end());
  // Partial Fisher-Yates: the first `count` slots end up a uniform subset.
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + below(scratch.size() - i);
    std::swap(scratch[i], scratch[j]);
  }
  scratch.resize(count);
  std::sort(scratch.begin(), scratch.end());
  return scratch;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

std::string format_set(const ArmSet& set) {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out << ',';
    out << set[i];
  }
  out << '}';
  return out.str();
}

}  // namespace bestofk
