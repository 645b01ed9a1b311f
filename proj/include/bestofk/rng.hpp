#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

#include "bestofk/types.hpp"

namespace bestofk {

/// Explicit, seedable generator state. Everything random in the library draws
/// from one of these; there is no global generator.
///
/// Only the engine comes from <random>. The distributions are written out here
/// because the standard library's distributions are implementation-defined,
/// and runs must be bit-reproducible per seed across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound). bound must be positive.
  std::size_t below(std::size_t bound);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// `count` distinct elements of `pool` drawn uniformly, returned sorted.
  ArmSet sample_subset(std::span<const Arm> pool, std::size_t count);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `index` under `base`: counter-mixed so that neighbouring
/// indices give unrelated engine states.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace bestofk
