#include "bestofk/baselines.hpp"

#include <algorithm>

#include "bestofk/combinatorics.hpp"

namespace bestofk {

namespace {

// Reward of one pull of `subset` given the observation.
using RewardFn = std::uint8_t (*)(const Observation&);

std::uint8_t max_reward(const Observation& obs) { return obs.bit; }

std::uint8_t parity_reward(const Observation& obs) {
  std::uint8_t w = 0;
  for (auto b : obs.bits) w ^= b;
  return w;
}

TrialRecord subset_elimination(const Measure& env, std::size_t k, double delta, Rng& rng,
                               const SubsetEliminationConfig& config, FeedbackModel model, RewardFn reward) {
  const std::size_t n = arm_count(env);
  if (k < 1 || k > n) throw PreconditionError("need 1 <= k <= n");
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("delta must lie in (0, 1)");
  if (binomial(n, k) > static_cast<double>(config.subset_cap)) {
    throw SizeCapError("C(" + std::to_string(n) + "," + std::to_string(k) + ") subsets exceed the cap of " +
                       std::to_string(config.subset_cap));
  }
  std::vector<SubsetArm> arms;
  for_each_combination(iota_set(n), k, [&](const ArmSet& s) { arms.push_back(SubsetArm{s, 0, 0}); });
  const std::size_t total_subsets = arms.size();

  TrialRecord record;
  if (total_subsets == 1) {
    record.returned = arms.front().subset;
    return record;
  }

  QueryLedger ledger;
  Game game(env, model, QueryRules{n, k, true}, rng, ledger);
  if (config.observation_sink) game.set_sink(config.observation_sink);

  std::vector<SubsetArm*> alive;
  for (auto& a : arms) alive.push_back(&a);
  std::vector<Interval> intervals;
  std::size_t round = 1;
  std::uint64_t T = 2;
  while (alive.size() > 1) {
    if (round > config.round_cap) {
      record.inconclusive = true;
      record.warnings.push_back("round cap " + std::to_string(config.round_cap) + " reached");
      break;
    }
    const std::uint64_t before = ledger.total();
    intervals.clear();
    for (SubsetArm* a : alive) {
      // Fresh samples every round.
      std::uint64_t ones = 0;
      for (std::uint64_t s = 0; s < T; ++s) ones += reward(game.play(a->subset));
      a->pulls += T;
      a->ones += ones;
      intervals.push_back(
          confidence_radius(static_cast<double>(ones) / static_cast<double>(T), T, total_subsets, round, delta));
    }
    double best_lower = intervals.front().lower();
    for (const auto& iv : intervals) best_lower = std::max(best_lower, iv.lower());

    StageLog log;
    log.t = round;
    log.undecided = alive.size();
    log.T = T;
    log.queries = ledger.total() - before;

    std::vector<SubsetArm*> next;
    for (std::size_t j = 0; j < alive.size(); ++j) {
      if (!(intervals[j].upper() < best_lower)) next.push_back(alive[j]);
    }
    alive = std::move(next);
    if (config.stage_sink) config.stage_sink(log);
    record.stage_log.push_back(std::move(log));
    ++record.stages;
    ++round;
    T *= 2;
    if (config.max_queries && ledger.total() >= *config.max_queries && alive.size() > 1) {
      record.inconclusive = true;
      record.warnings.push_back("query budget " + std::to_string(*config.max_queries) + " exhausted");
      break;
    }
  }
  if (alive.size() == 1) {
    record.returned = alive.front()->subset;
  } else {
    // Inconclusive: report the survivor with the highest empirical mean.
    auto best = std::max_element(alive.begin(), alive.end(), [](const SubsetArm* a, const SubsetArm* b) {
      return static_cast<double>(a->ones) / static_cast<double>(a->pulls) <
             static_cast<double>(b->ones) / static_cast<double>(b->pulls);
    });
    record.returned = (*best)->subset;
  }
  record.queries = ledger.total();
  return record;
}

}  // namespace

std::uint8_t parity_of(std::span<const std::uint8_t> x, std::span<const Arm> subset) {
  std::uint8_t w = 0;
  for (Arm a : subset) w ^= x[a];
  return w;
}

TrialRecord subset_arm_identify(const Measure& env, std::size_t k, double delta, Rng& rng,
                                const SubsetEliminationConfig& config) {
  return subset_elimination(env, k, delta, rng, config, FeedbackModel::bandit, max_reward);
}

TrialRecord parity_identify(const Measure& env, std::size_t k, double delta, Rng& rng,
                            const SubsetEliminationConfig& config) {
  return subset_elimination(env, k, delta, rng, config, FeedbackModel::semi, parity_reward);
}

}  // namespace bestofk
