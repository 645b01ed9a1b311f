#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "bestofk/elimination.hpp"

namespace bestofk {

/// Running count for one subset treated as a single arm.
struct SubsetArm {
  ArmSet subset;
  std::uint64_t pulls = 0;
  std::uint64_t ones = 0;
};

struct SubsetEliminationConfig {
  std::size_t subset_cap = 100000;
  std::size_t round_cap = 40;
  std::optional<std::uint64_t> max_queries;
  std::function<void(const StageLog&)> stage_sink;
  ObservationSink observation_sink;
};

/// XOR of the bits of `subset` in x.
std::uint8_t parity_of(std::span<const std::uint8_t> x, std::span<const Arm> subset);

/// Every k-subset is an arm with reward max_{i in S} X_i under bandit
/// feedback. Rounds r = 1, 2, ... pull each survivor 2^r fresh times and drop
/// S once its upper bound falls below the best lower bound.
TrialRecord subset_arm_identify(const Measure& env, std::size_t k, double delta, Rng& rng,
                                const SubsetEliminationConfig& config = {});

/// Same elimination over k-subsets with semi feedback, scoring each pull by the
/// parity of the subset's bits. Targets planted instances with mu = 1/2, where
/// only the planted set has a parity mean above 1/2.
TrialRecord parity_identify(const Measure& env, std::size_t k, double delta, Rng& rng,
                            const SubsetEliminationConfig& config = {});

}  // namespace bestofk
